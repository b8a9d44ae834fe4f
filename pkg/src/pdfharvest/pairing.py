"""Image-text pairing by embedding cosine similarity.

Strategies: Top1 (single best text), TopK (k best, similarity
descending), Neighbor (best text plus its reading-order neighbors).
Candidates must arrive in reading order; list position is the
reading-order position used for tie-breaks and neighbor windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NoCandidates, ZeroVector
from .page_extract import TextBlock


class Modality(str, Enum):
    IMAGE = "image"
    TEXT = "text"


@dataclass(frozen=True)
class Embedding:
    vector: np.ndarray
    dim: int

    def __post_init__(self):
        if self.vector.shape != (self.dim,):
            raise DimensionMismatch(f"vector shape {self.vector.shape} != dim {self.dim}")


class StrategyKind(str, Enum):
    TOP1 = "Top1"
    TOPK = "TopK"
    NEIGHBOR = "Neighbor"


@dataclass(frozen=True)
class PairingStrategy:
    kind: StrategyKind
    k: int = 1

    def __post_init__(self):
        if self.kind is StrategyKind.TOPK and self.k < 1:
            raise ValueError("TopK requires k >= 1")

    @classmethod
    def top1(cls) -> "PairingStrategy":
        return cls(StrategyKind.TOP1)

    @classmethod
    def top_k(cls, k: int) -> "PairingStrategy":
        return cls(StrategyKind.TOPK, k)

    @classmethod
    def neighbor(cls) -> "PairingStrategy":
        return cls(StrategyKind.NEIGHBOR)

    @classmethod
    def parse(cls, text: str) -> "PairingStrategy":
        t = text.strip().lower()
        if t == "top1":
            return cls.top1()
        if t.startswith("top"):
            return cls.top_k(int(t[3:]))
        if t == "neighbor":
            return cls.neighbor()
        raise ValueError(f"unknown pairing strategy {text!r}")

    def label(self) -> str:
        if self.kind is StrategyKind.TOPK:
            return f"Top{self.k}"
        return self.kind.value


@dataclass(frozen=True)
class PairedText:
    block: TextBlock
    similarity: float
    candidate_index: int


@dataclass(frozen=True)
class PairedSample:
    image_region_id: str
    texts: tuple[PairedText, ...]
    strategy: PairingStrategy


def embed(value, modality: Modality, embedder) -> Embedding:
    """Embed an image asset path or a text string via the provider."""
    if modality is Modality.TEXT:
        if not isinstance(value, str) or not value:
            raise EmptyInput("text input is empty")
        vec = np.asarray(embedder.embed_text(value), dtype=np.float64)
    else:
        vec = np.asarray(embedder.embed_image(value), dtype=np.float64)
    dim = int(embedder.dim)
    if vec.shape != (dim,):
        raise DimensionMismatch(f"provider returned shape {vec.shape}, declared dim {dim}")
    return Embedding(vec, dim)


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims differ: {a.dim} vs {b.dim}")
    norm_a = float(np.linalg.norm(a.vector))
    norm_b = float(np.linalg.norm(b.vector))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(np.dot(a.vector, b.vector) / (norm_a * norm_b))


def select_pairs(scores: Sequence[float], strategy: PairingStrategy) -> list[int]:
    """Candidate indices chosen by a strategy, in emission order.

    Top1: argmax (ties go to the lowest index). TopK: min(k, n) best,
    similarity descending. Neighbor: argmax plus its immediate
    predecessor and successor, emitted in reading order.
    """
    n = len(scores)
    if n == 0:
        raise NoCandidates("no candidate texts to pair")
    best = min(range(n), key=lambda i: (-scores[i], i))
    if strategy.kind is StrategyKind.TOP1:
        return [best]
    if strategy.kind is StrategyKind.TOPK:
        ranked = sorted(range(n), key=lambda i: (-scores[i], i))
        return ranked[: min(strategy.k, n)]
    return [i for i in (best - 1, best, best + 1) if 0 <= i < n]


def pair(
    image_emb: Embedding,
    candidates: Sequence[tuple[TextBlock, Embedding]],
    strategy: PairingStrategy,
) -> PairedSample:
    """Pair one image embedding against reading-ordered text candidates."""
    if not candidates:
        raise NoCandidates("no candidate texts to pair")
    scores = [cosine_similarity(image_emb, emb) for _, emb in candidates]
    chosen = select_pairs(scores, strategy)
    texts = tuple(PairedText(candidates[i][0], scores[i], i) for i in chosen)
    return PairedSample("", texts, strategy)
