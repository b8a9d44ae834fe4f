"""Dataset export, corpus statistics, and judge-score aggregation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import (
    EmptyInput,
    InvariantViolation,
    IoFailure,
    MissingStageLog,
    NonPositiveReference,
)
from .textgen import IMAGE_TOKEN, InstructionSample, Speaker

# reference throughput from the source corpus: 362K instructions / 200K PDFs
REFERENCE_INSTRUCTIONS_PER_PDF = 362_000 / 200_000

ASSISTANT_FROM_TAG = "gpt"  # ecosystem conversation-JSON convention
HUMAN_FROM_TAG = "human"


@dataclass(frozen=True)
class ExportRecord:
    id: str
    image: str  # path relative to the images/ root
    conversations: tuple[dict, ...]


def _to_export_record(sample: InstructionSample, image_rel: str) -> ExportRecord:
    conversations = []
    for i, (speaker, text) in enumerate(sample.conversation.turns):
        tag = HUMAN_FROM_TAG if speaker is Speaker.HUMAN else ASSISTANT_FROM_TAG
        value = text
        if i == 0:
            value = f"{IMAGE_TOKEN}\n{value}"
        conversations.append({"from": tag, "value": value})
    return ExportRecord(sample.id, image_rel, tuple(conversations))


@dataclass(frozen=True)
class ExportManifest:
    path: Path
    record_count: int
    image_root: Path


def export_dataset(samples: list[InstructionSample], out: Path) -> ExportManifest:
    """Write samples as a deterministic conversation-JSON array.

    Records are sorted by id; image paths are relative to images/ next
    to the dataset file; the <image> token heads the first human turn.
    """
    out = Path(out)
    image_root = out.parent / "images"
    seen: set[str] = set()
    records = []
    for sample in samples:
        if sample.id in seen:
            raise InvariantViolation(f"duplicate sample id {sample.id}")
        seen.add(sample.id)
        image_path = Path(sample.image_asset)
        if not image_path.exists():
            raise InvariantViolation(f"image asset missing: {image_path}")
        records.append(_to_export_record(sample, image_path.name))
    records.sort(key=lambda r: r.id)
    payload = [
        {"id": r.id, "image": f"images/{r.image}", "conversations": list(r.conversations)}
        for r in records
    ]
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = out.with_suffix(out.suffix + ".tmp")
        tmp.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        tmp.replace(out)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return ExportManifest(out, len(records), image_root)


@dataclass(frozen=True)
class CorpusStats:
    pdfs_scanned: int
    pdfs_selected: int
    pages_processed: int
    images_extracted: int
    images_size_filtered: int
    pairs_emitted: int
    samples_quarantined: int
    instructions_emitted: int
    instructions_per_pdf: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["reference_instructions_per_pdf"] = round(REFERENCE_INSTRUCTIONS_PER_PDF, 2)
        return d


def compute_stats(stage_counts: dict) -> CorpusStats:
    """Fold per-stage counters into corpus statistics.

    stage_counts must carry every CorpusStats counter field; the
    per-PDF ratio is derived here.
    """
    required = (
        "pdfs_scanned",
        "pdfs_selected",
        "pages_processed",
        "images_extracted",
        "images_size_filtered",
        "pairs_emitted",
        "samples_quarantined",
        "instructions_emitted",
    )
    missing = [k for k in required if k not in stage_counts]
    if missing:
        raise MissingStageLog(f"stage counters missing: {', '.join(missing)}")
    values = {k: int(stage_counts[k]) for k in required}
    if any(v < 0 for v in values.values()):
        raise InvariantViolation("stage counters must be non-negative")
    selected = values["pdfs_selected"]
    ratio = values["instructions_emitted"] / selected if selected > 0 else 0.0
    return CorpusStats(instructions_per_pdf=ratio, **values)


# -- judge-score aggregation ---------------------------------------------


@dataclass(frozen=True)
class JudgeRow:
    question_id: str
    category: str
    model_score: float
    reference_score: float


@dataclass(frozen=True)
class CategoryScore:
    model_mean: float
    reference_mean: float
    ratio_pct: float


@dataclass(frozen=True)
class ScoreTable:
    per_category: dict[str, CategoryScore]
    overall_ratio_pct: float
    overall_model_mean: float
    overall_reference_mean: float


def read_judge_rows(path: Path) -> list[JudgeRow]:
    """Load judge rows from CSV or newline-delimited JSON, keyed by the
    headers question_id, category, model_score, reference_score."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows: list[JudgeRow] = []
    if path.suffix.lower() in (".ndjson", ".jsonl") or text.lstrip()[:1] == "{":
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            rows.append(
                JudgeRow(
                    str(raw["question_id"]),
                    str(raw["category"]),
                    float(raw["model_score"]),
                    float(raw["reference_score"]),
                )
            )
        return rows
    for raw in csv.DictReader(text.splitlines()):
        rows.append(
            JudgeRow(
                raw["question_id"],
                raw["category"],
                float(raw["model_score"]),
                float(raw["reference_score"]),
            )
        )
    return rows


def aggregate_judge_scores(rows: list[JudgeRow]) -> ScoreTable:
    """Per-category and pooled-overall score ratios:
    100 x mean(model) / mean(reference). Values above 100 are valid and
    mean the model outscored the reference answers."""
    if not rows:
        raise EmptyInput("no judge rows")
    for row in rows:
        if row.reference_score <= 0:
            raise NonPositiveReference(
                f"question {row.question_id}: reference score {row.reference_score}"
            )
    by_category: dict[str, list[JudgeRow]] = {}
    for row in rows:
        by_category.setdefault(row.category, []).append(row)
    per_category = {}
    for category in sorted(by_category):
        group = by_category[category]
        model_mean = sum(r.model_score for r in group) / len(group)
        ref_mean = sum(r.reference_score for r in group) / len(group)
        per_category[category] = CategoryScore(
            model_mean, ref_mean, 100.0 * model_mean / ref_mean
        )
    overall_model = sum(r.model_score for r in rows) / len(rows)
    overall_ref = sum(r.reference_score for r in rows) / len(rows)
    return ScoreTable(
        per_category,
        100.0 * overall_model / overall_ref,
        overall_model,
        overall_ref,
    )
