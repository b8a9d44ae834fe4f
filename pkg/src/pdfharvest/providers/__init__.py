"""Provider interfaces for model-backed capabilities.

Every capability has a builtin deterministic implementation (no model
downloads, runs offline) and a remote client speaking the sidecar's
newline-delimited JSON protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable


@dataclass(frozen=True)
class RecognizedText:
    text: str
    confidence: float


@runtime_checkable
class LayoutProvider(Protocol):
    provider_id: str

    def analyze_page(self, page) -> Sequence: ...


@runtime_checkable
class TextRecognizer(Protocol):
    provider_id: str

    def recognize(self, page, regions) -> Sequence[RecognizedText]: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed_text(self, text: str): ...

    def embed_image(self, path: Path): ...


@runtime_checkable
class ContentGenerator(Protocol):
    provider_id: str

    def generate(self, prompt: str, image: Path | None = None) -> str: ...


from .builtin import (  # noqa: E402
    BuiltinEmbedder,
    BuiltinGenerator,
    BuiltinLayoutProvider,
    BuiltinTextRecognizer,
)
from .remote import (  # noqa: E402
    RemoteEmbedder,
    RemoteGenerator,
    RemoteLayoutProvider,
    RemoteTextRecognizer,
    SidecarClient,
)

__all__ = [
    "BuiltinEmbedder",
    "BuiltinGenerator",
    "BuiltinLayoutProvider",
    "BuiltinTextRecognizer",
    "ContentGenerator",
    "EmbeddingProvider",
    "LayoutProvider",
    "RecognizedText",
    "RemoteEmbedder",
    "RemoteGenerator",
    "RemoteLayoutProvider",
    "RemoteTextRecognizer",
    "SidecarClient",
    "TextRecognizer",
]
