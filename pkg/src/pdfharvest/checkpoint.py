"""Document-level stage checkpointing with atomic persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

from .errors import ConfigMismatch, CorruptCheckpoint


class Stage(IntEnum):
    SELECTED = 1
    EXTRACTED = 2
    PAIRED = 3
    SCREENED = 4
    GENERATED = 5
    EXPORTED = 6


STAGE_BY_NAME = {stage.name.capitalize(): stage for stage in Stage}


@dataclass
class Checkpoint:
    run_id: str
    config_hash: str
    docs: dict[str, Stage] = field(default_factory=dict)
    rejected: dict[str, str] = field(default_factory=dict)  # doc_id -> reason

    def advance(self, doc_id: str, stage: Stage) -> None:
        """Record stage completion; regressions are ignored so statuses
        stay monotone across resumes."""
        current = self.docs.get(doc_id)
        if current is None or stage > current:
            self.docs[doc_id] = stage

    def stage_of(self, doc_id: str) -> Stage | None:
        return self.docs.get(doc_id)

    def save(self, path: Path) -> None:
        payload = {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "docs": {k: self.docs[k].name.capitalize() for k in sorted(self.docs)},
            "rejected": {k: self.rejected[k] for k in sorted(self.rejected)},
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path: Path, expected_hash: str | None = None) -> "Checkpoint":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            docs = {k: STAGE_BY_NAME[v] for k, v in raw["docs"].items()}
            rejected = {str(k): str(v) for k, v in raw.get("rejected", {}).items()}
            ckpt = cls(str(raw["run_id"]), str(raw["config_hash"]), docs, rejected)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorruptCheckpoint(f"cannot load checkpoint {path}: {exc}") from exc
        if expected_hash is not None and ckpt.config_hash != expected_hash:
            raise ConfigMismatch(
                "checkpoint was written by a run with a different configuration"
            )
        return ckpt
