"""Prompted text generation and the 質問/回答 conversation protocol.

Prompt bodies ship as immutable text resources; rendering only fills
the optional context insertion point. Conversations are parsed
strictly: blank-line separated segments, each prefixed 質問: or 回答:,
strictly alternating, at least one full pair.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import (
    EmptyReply,
    InvalidInputJson,
    InvalidOutputJson,
    MalformedConversation,
    TokenLost,
)

QUESTION_PREFIX = "質問:"
ANSWER_PREFIX = "回答:"
TURN_SEPARATOR = "\n\n"
IMAGE_TOKEN = "<image>"

_SENTENCE_END = re.compile(r"[。！？.!?]+")


class TemplateName(str, Enum):
    PDF_STYLE = "PdfStyle"
    INSTRUCTION = "Instruction"
    TRANSLATE = "Translate"


_TEMPLATE_FILES = {
    TemplateName.PDF_STYLE: "pdf_style.txt",
    TemplateName.INSTRUCTION: "instruction.txt",
    TemplateName.TRANSLATE: "translate.txt",
}


class ContextMode(str, Enum):
    IMAGE_ONLY = "ImageOnly"
    IMAGE_PLUS_PAIRED_TEXT = "ImagePlusPairedText"
    IMAGE_PLUS_PDF_STYLE_TEXT = "ImagePlusPdfStyleText"


@dataclass(frozen=True)
class PromptTemplate:
    name: TemplateName
    body: str

    def sha256(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()

    def render(self, context_text: str = "") -> str:
        block = context_text.strip()
        if block:
            block = block + TURN_SEPARATOR
        return self.body.replace("{context_text}", block)


def load_template(name: TemplateName) -> PromptTemplate:
    path = resources.files("pdfharvest.templates") / _TEMPLATE_FILES[name]
    return PromptTemplate(name, path.read_text(encoding="utf-8"))


def template_hashes() -> dict[str, str]:
    return {name.value: load_template(name).sha256() for name in TemplateName}


class Speaker(str, Enum):
    HUMAN = "human"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class Conversation:
    turns: tuple[tuple[Speaker, str], ...]

    def __post_init__(self):
        if not self.turns:
            raise MalformedConversation("conversation has no turns")
        if len(self.turns) % 2:
            raise MalformedConversation("conversation has an odd number of turns")
        for i, (speaker, text) in enumerate(self.turns):
            expected = Speaker.HUMAN if i % 2 == 0 else Speaker.ASSISTANT
            if speaker is not expected:
                raise MalformedConversation(f"turn {i} breaks alternation")
            if not text.strip():
                raise MalformedConversation(f"turn {i} is empty")

    def pair_count(self) -> int:
        return len(self.turns) // 2


@dataclass(frozen=True)
class InstructionSample:
    id: str
    image_asset: Path
    conversation: Conversation
    provenance: ContextMode
    generator_id: str


@dataclass(frozen=True)
class GeneratedText:
    text: str
    over_length: bool
    prompt_sha256: str


def count_sentences(text: str) -> int:
    """Approximate sentence count via Japanese and ASCII terminators."""
    stripped = text.strip()
    if not stripped:
        return 0
    count = len(_SENTENCE_END.findall(stripped))
    if not _SENTENCE_END.search(stripped[-1]):
        count += 1  # trailing fragment without a terminator
    return count


def parse_conversation(raw: str) -> Conversation:
    """Parse generator output into alternating 質問/回答 turns."""
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedConversation("empty reply")
    turns: list[tuple[Speaker, str]] = []
    for segment in raw.split(TURN_SEPARATOR):
        segment = segment.strip()
        if not segment:
            continue
        if segment.startswith(QUESTION_PREFIX):
            speaker, text = Speaker.HUMAN, segment[len(QUESTION_PREFIX):]
        elif segment.startswith(ANSWER_PREFIX):
            speaker, text = Speaker.ASSISTANT, segment[len(ANSWER_PREFIX):]
        else:
            raise MalformedConversation(f"segment has no 質問:/回答: prefix: {segment[:40]!r}")
        text = text.strip()
        if not text:
            raise MalformedConversation("turn text is empty")
        expected = Speaker.HUMAN if len(turns) % 2 == 0 else Speaker.ASSISTANT
        if speaker is not expected:
            raise MalformedConversation("turns do not alternate 質問/回答")
        turns.append((speaker, text))
    if not turns:
        raise MalformedConversation("no recognizable turns")
    if len(turns) % 2:
        raise MalformedConversation("conversation ends on an unanswered question")
    return Conversation(tuple(turns))


def render_conversation(conv: Conversation) -> str:
    """Inverse of parse_conversation for representable conversations."""
    parts = []
    for speaker, text in conv.turns:
        if TURN_SEPARATOR in text:
            raise MalformedConversation("turn text contains the blank-line separator")
        prefix = QUESTION_PREFIX if speaker is Speaker.HUMAN else ANSWER_PREFIX
        parts.append(f"{prefix} {text}")
    return TURN_SEPARATOR.join(parts)


def gen_pdf_style(image: Path, generator) -> GeneratedText:
    """Generate a brief indirect description in the register of PDF
    prose. Replies longer than 2 sentences are flagged, not truncated."""
    template = load_template(TemplateName.PDF_STYLE)
    reply = generator.generate(template.body, image=image)
    text = (reply or "").strip()
    if not text:
        raise EmptyReply("generator returned no PDF-style text")
    return GeneratedText(text, count_sentences(text) > 2, template.sha256())


def gen_instructions(
    image: Path,
    context: str | None,
    mode: ContextMode,
    generator,
    retries: int = 1,
    audit: dict | None = None,
) -> Conversation:
    """Generate an instruction conversation for one image.

    Malformed replies are retried once with the identical prompt. When
    an audit dict is passed it receives the prompt hash and attempt
    count for the caller's audit log."""
    if (mode is ContextMode.IMAGE_ONLY) != (context is None):
        raise ValueError("context must be present exactly when mode is not ImageOnly")
    template = load_template(TemplateName.INSTRUCTION)
    prompt = template.render(context or "")
    if audit is not None:
        audit["prompt_sha256"] = template.sha256()
    last_error: MalformedConversation | None = None
    for attempt in range(retries + 1):
        if audit is not None:
            audit["attempts"] = attempt + 1
        reply = generator.generate(prompt, image=image)
        try:
            return parse_conversation(reply)
        except MalformedConversation as exc:
            last_error = exc
    raise last_error


def _image_token_count(value: str) -> int:
    return value.count(IMAGE_TOKEN)


def _validate_records(records, error_cls):
    if not isinstance(records, list):
        raise error_cls("expected a JSON array")
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or set(rec) != {"from", "value"}:
            raise error_cls(f"record {i} is not a {{from, value}} object")
        if not isinstance(rec["from"], str) or not isinstance(rec["value"], str):
            raise error_cls(f"record {i} has non-string fields")


def translate_samples(records, generator) -> list[dict]:
    """Translate the value fields of {from, value} records, preserving
    structure and every <image> token."""
    if isinstance(records, (str, bytes)):
        try:
            records = json.loads(records)
        except json.JSONDecodeError as exc:
            raise InvalidInputJson(str(exc)) from exc
    _validate_records(records, InvalidInputJson)
    template = load_template(TemplateName.TRANSLATE)
    prompt = template.body + "\n\n" + json.dumps(records, ensure_ascii=False)
    reply = generator.generate(prompt)
    try:
        translated = json.loads(reply)
    except (json.JSONDecodeError, TypeError) as exc:
        raise InvalidOutputJson(f"generator reply is not JSON: {exc}") from exc
    _validate_records(translated, InvalidOutputJson)
    if len(translated) != len(records):
        raise InvalidOutputJson(
            f"record count changed: {len(records)} in, {len(translated)} out"
        )
    for i, (src, dst) in enumerate(zip(records, translated)):
        if src["from"] != dst["from"]:
            raise InvalidOutputJson(f"record {i} changed its from field")
        if _image_token_count(src["value"]) != _image_token_count(dst["value"]):
            raise TokenLost(f"record {i} changed its {IMAGE_TOKEN} count")
    return translated
