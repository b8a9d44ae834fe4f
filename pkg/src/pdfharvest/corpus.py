"""Corpus selection: probe PDF structure and decide which documents to keep.

Probing reads the object structure only (page count, image XObjects on
the first page) — no rasterization — so it stays cheap at corpus scale.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

from .pdfio import PdfDocument


class RejectionReason(str, Enum):
    PARSE_FAILURE = "ParseFailure"
    TOO_MANY_PAGES = "TooManyPages"
    NO_IMAGES = "NoImages"
    DUPLICATE = "Duplicate"


@dataclass(frozen=True)
class PdfProbe:
    doc_id: str
    source_uri: str
    page_count: int
    first_page_image_count: int
    parse_ok: bool


@dataclass(frozen=True)
class SelectionPolicy:
    max_pages: int = 5
    min_first_page_images: int = 1

    def __post_init__(self):
        if self.max_pages < 1:
            raise ValueError("max_pages must be >= 1")
        if self.min_first_page_images < 0:
            raise ValueError("min_first_page_images must be >= 0")


@dataclass(frozen=True)
class SelectionDecision:
    doc_id: str
    accepted: bool
    rejection_reason: RejectionReason | None = None
    selected_page_index: int | None = None

    def __post_init__(self):
        if self.accepted == (self.rejection_reason is not None):
            raise ValueError("exactly one of accepted / rejection_reason must hold")
        if self.accepted and self.selected_page_index != 0:
            raise ValueError("accepted decisions select page 0")


def dedup_key(data: bytes) -> str:
    """Stable content hash; doubles as the document id."""
    return hashlib.sha256(data).hexdigest()[:16]


def probe_pdf(data: bytes, source_uri: str = "") -> PdfProbe:
    """Structural probe of a PDF byte sequence. Never raises: parse
    failures come back as parse_ok=False with zeroed counts."""
    doc_id = dedup_key(data if isinstance(data, (bytes, bytearray)) else b"")
    try:
        doc = PdfDocument(data)
        n_images = doc.count_page_images(0)
        return PdfProbe(doc_id, source_uri, doc.page_count, n_images, True)
    except Exception:
        return PdfProbe(doc_id, source_uri, 0, 0, False)


def select(probe: PdfProbe, policy: SelectionPolicy = SelectionPolicy()) -> SelectionDecision:
    """Accept iff the document parsed, fits the page budget, and shows
    images on the first page. Rejection reasons are reported in fixed
    precedence: ParseFailure, then TooManyPages, then NoImages."""
    if not probe.parse_ok:
        return SelectionDecision(probe.doc_id, False, RejectionReason.PARSE_FAILURE)
    if probe.page_count > policy.max_pages:
        return SelectionDecision(probe.doc_id, False, RejectionReason.TOO_MANY_PAGES)
    if probe.first_page_image_count < policy.min_first_page_images:
        return SelectionDecision(probe.doc_id, False, RejectionReason.NO_IMAGES)
    return SelectionDecision(probe.doc_id, True, None, 0)


def mark_duplicate(doc_id: str) -> SelectionDecision:
    """Decision for a byte-identical repeat of an earlier document."""
    return SelectionDecision(doc_id, False, RejectionReason.DUPLICATE)
