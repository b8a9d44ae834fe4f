"""Two-tier NSFW/PII screening: cheap deterministic rules, then a
model-backed classifier for whatever the rules pass."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import MalformedVerdict, MissingVerdict


class VerdictSource(str, Enum):
    RULE_BASED = "RuleBased"
    MODEL_BASED = "ModelBased"


@dataclass(frozen=True)
class SafetyVerdict:
    nsfw: bool
    pii: bool
    reasons: tuple[str, ...]
    source: VerdictSource

    def __post_init__(self):
        if (self.nsfw or self.pii) and not self.reasons:
            raise ValueError("flagged verdicts must carry reasons")

    @property
    def flagged(self) -> bool:
        return self.nsfw or self.pii


_EMAIL = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
# Japanese phone shapes: 03-1234-5678, 090-1234-5678, 03(1234)5678,
# (03) 1234-5678, +81-3-1234-5678
_PHONE_JP = re.compile(
    r"(?:\+81[-\s]?\d{1,4}[-\s]?\d{1,4}[-\s]?\d{3,4}"
    r"|0\d{1,4}-\d{1,4}-\d{3,4}"
    r"|0\d{1,4}\(\d{1,4}\)\d{3,4}"
    r"|[(（]0\d{1,4}[)）]\s?\d{1,4}-\d{3,4})"
)
# postal code only counts as PII next to an address marker
_POSTAL = re.compile(r"(?:〒\s*)?\d{3}-\d{4}")
_ADDRESS_MARKERS = ("〒", "住所", "所在地", "番地", "丁目", "市", "区", "町", "村")


@dataclass(frozen=True)
class RulePack:
    nsfw_keywords: tuple[str, ...] = ()
    check_email: bool = True
    check_phone: bool = True
    check_postal_address: bool = True

    @classmethod
    def default(cls) -> "RulePack":
        return cls(nsfw_keywords=("アダルト", "ポルノ", "無修正", "explicit nudity"))

    @classmethod
    def from_json(cls, path: Path) -> "RulePack":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            nsfw_keywords=tuple(raw.get("nsfw_keywords", [])),
            check_email=bool(raw.get("check_email", True)),
            check_phone=bool(raw.get("check_phone", True)),
            check_postal_address=bool(raw.get("check_postal_address", True)),
        )


def rule_screen(text: str, rules: RulePack | None = None) -> SafetyVerdict:
    """Deterministic pattern screen for PII and keyword NSFW."""
    rules = rules or RulePack.default()
    reasons: list[str] = []
    pii = False
    nsfw = False
    if rules.check_email and _EMAIL.search(text):
        pii = True
        reasons.append("email")
    if rules.check_phone and _PHONE_JP.search(text):
        pii = True
        reasons.append("phone_jp")
    if rules.check_postal_address and _POSTAL.search(text):
        if any(marker in text for marker in _ADDRESS_MARKERS):
            pii = True
            reasons.append("postal_address")
    lowered = text.lower()
    for keyword in rules.nsfw_keywords:
        if keyword.lower() in lowered:
            nsfw = True
            reasons.append(f"nsfw_keyword:{keyword}")
    return SafetyVerdict(nsfw, pii, tuple(reasons), VerdictSource.RULE_BASED)


def safety_prompt(text: str) -> str:
    body = (resources.files("pdfharvest.templates") / "safety_screen.txt").read_text(
        encoding="utf-8"
    )
    return body.replace("{text}", text)


def safety_prompt_sha256() -> str:
    body = (resources.files("pdfharvest.templates") / "safety_screen.txt").read_text(
        encoding="utf-8"
    )
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def parse_verdict_reply(reply: str) -> SafetyVerdict:
    try:
        raw = json.loads(reply)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedVerdict(f"verdict reply is not JSON: {exc}") from exc
    if not isinstance(raw, dict) or not {"nsfw", "pii", "reasons"} <= set(raw):
        raise MalformedVerdict("verdict reply missing nsfw/pii/reasons fields")
    if not isinstance(raw["nsfw"], bool) or not isinstance(raw["pii"], bool):
        raise MalformedVerdict("nsfw/pii must be booleans")
    if not isinstance(raw["reasons"], list):
        raise MalformedVerdict("reasons must be a list")
    reasons = tuple(str(r) for r in raw["reasons"])
    if (raw["nsfw"] or raw["pii"]) and not reasons:
        reasons = ("unspecified",)
    return SafetyVerdict(raw["nsfw"], raw["pii"], reasons, VerdictSource.MODEL_BASED)


def model_screen(image: Path | None, text: str, generator) -> SafetyVerdict:
    """Ask the content generator for a strict-JSON safety verdict."""
    reply = generator.generate(safety_prompt(text), image=image)
    return parse_verdict_reply(reply)


def model_screen_with_retry(image, text, generator, retries: int = 2) -> SafetyVerdict:
    """model_screen, retrying malformed replies; after the retry budget
    the sample is conservatively treated as unsafe."""
    last: MalformedVerdict | None = None
    for _ in range(retries + 1):
        try:
            return model_screen(image, text, generator)
        except MalformedVerdict as exc:
            last = exc
    return SafetyVerdict(
        True, True, (f"unparseable_verdict: {last}",), VerdictSource.MODEL_BASED
    )


@dataclass
class FilterResult:
    kept: list = field(default_factory=list)
    quarantined: list = field(default_factory=list)


def apply_filter(samples: list, verdicts: dict) -> tuple[list, list]:
    """Partition samples by their verdicts. verdicts maps id(sample
    key) -> SafetyVerdict; every sample must have one."""
    kept, quarantined = [], []
    for key, sample in samples:
        verdict = verdicts.get(key)
        if verdict is None:
            raise MissingVerdict(f"no verdict for sample {key!r}")
        (quarantined if verdict.flagged else kept).append((key, sample))
    return kept, quarantined
