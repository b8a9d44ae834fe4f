"""Run configuration: validation, canonical hashing, provider wiring."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigInvalid
from .pairing import PairingStrategy
from .safety import safety_prompt_sha256
from .textgen import ContextMode, template_hashes

PROVIDER_ROLES = ("layout", "recognizer", "embedder", "generator")
BUILTIN = "builtin"


def prompt_hashes() -> dict[str, str]:
    """Hashes of every shipped prompt resource; part of run identity so
    a template edit invalidates checkpoints."""
    hashes = template_hashes()
    hashes["SafetyScreen"] = safety_prompt_sha256()
    return hashes

# execution knobs that do not affect produced artifacts and therefore
# stay out of the config hash (resume tolerates changing them)
_UNHASHED_FIELDS = ("workers", "provider_throttle_ms")


@dataclass(frozen=True)
class RunConfig:
    input: str
    out: str
    max_pages: int = 5
    min_first_page_images: int = 1
    dpi: int = 150
    jpeg_quality: int = 90
    min_chars: int = 3
    min_script_ratio: float = 0.5
    pairing: str = "top1"
    context_mode: str = ContextMode.IMAGE_ONLY.value
    generate_pdf_style: bool = True
    qa_pairs_per_image: int = 3
    embed_dim: int = 64
    seed: int = 0
    providers: dict = field(
        default_factory=lambda: {role: BUILTIN for role in PROVIDER_ROLES}
    )
    rule_pack: str | None = None
    workers: int = 1
    provider_throttle_ms: int = 0

    def __post_init__(self):
        merged = {role: BUILTIN for role in PROVIDER_ROLES}
        merged.update(self.providers)
        object.__setattr__(self, "providers", merged)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_json(cls, path: Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config fields: {', '.join(sorted(unknown))}")
        if "input" not in raw or "out" not in raw:
            raise ConfigInvalid("config requires input and out")
        merged_providers = {role: BUILTIN for role in PROVIDER_ROLES}
        merged_providers.update(raw.get("providers", {}))
        raw = dict(raw, providers=merged_providers)
        return cls(**raw)

    def with_overrides(self, input=None, out=None, workers=None, providers=None) -> "RunConfig":
        cfg = self
        if input is not None:
            cfg = replace(cfg, input=str(input))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        if workers is not None:
            cfg = replace(cfg, workers=workers)
        if providers:
            merged = dict(cfg.providers)
            merged.update(providers)
            cfg = replace(cfg, providers=merged)
        return cfg

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        if not Path(self.input).exists():
            raise ConfigInvalid(f"input path does not exist: {self.input}")
        if self.max_pages < 1:
            raise ConfigInvalid("max_pages must be >= 1")
        if self.min_first_page_images < 0:
            raise ConfigInvalid("min_first_page_images must be >= 0")
        if self.dpi <= 0:
            raise ConfigInvalid("dpi must be positive")
        if not (1 <= self.jpeg_quality <= 100):
            raise ConfigInvalid("jpeg_quality must be in 1..100")
        if not (0.0 <= self.min_script_ratio <= 1.0):
            raise ConfigInvalid("min_script_ratio must be in [0, 1]")
        if self.workers < 1:
            raise ConfigInvalid("workers (concurrency limit) must be >= 1")
        if self.embed_dim < 1:
            raise ConfigInvalid("embed_dim must be >= 1")
        if self.qa_pairs_per_image < 1:
            raise ConfigInvalid("qa_pairs_per_image must be >= 1")
        try:
            PairingStrategy.parse(self.pairing)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc
        try:
            ContextMode(self.context_mode)
        except ValueError as exc:
            raise ConfigInvalid(f"unknown context_mode {self.context_mode!r}") from exc
        if set(self.providers) - set(PROVIDER_ROLES):
            extra = set(self.providers) - set(PROVIDER_ROLES)
            raise ConfigInvalid(f"unknown provider roles: {', '.join(sorted(extra))}")
        for role in PROVIDER_ROLES:
            addr = self.providers.get(role, BUILTIN)
            if addr == BUILTIN:
                continue
            host, _, port = str(addr).rpartition(":")
            if not host or not port.isdigit() or not (0 < int(port) < 65536):
                raise ConfigInvalid(f"provider {role}: expected builtin or host:port, got {addr!r}")
        if self.rule_pack is not None and not Path(self.rule_pack).exists():
            raise ConfigInvalid(f"rule pack not found: {self.rule_pack}")

    # -- identity ---------------------------------------------------------

    def canonical(self) -> dict:
        data = asdict(self)
        for key in _UNHASHED_FIELDS:
            data.pop(key, None)
        data["prompt_hashes"] = prompt_hashes()
        return data

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @property
    def strategy(self) -> PairingStrategy:
        return PairingStrategy.parse(self.pairing)

    @property
    def mode(self) -> ContextMode:
        return ContextMode(self.context_mode)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)
