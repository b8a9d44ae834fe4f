"""Shared fixtures: scripted PDF writer (reportlab) and corpus builders.

reportlab acts as the independent writer-side oracle: fixtures are
constructed with known ground truth (page counts, image placements,
text positions) that the package's own reader must reproduce.
"""

from __future__ import annotations

import io
import random
from dataclasses import dataclass, field
from pathlib import Path

import pytest
from PIL import Image
from reportlab.lib.utils import ImageReader
from reportlab.pdfbase import pdfmetrics
from reportlab.pdfbase.cidfonts import UnicodeCIDFont
from reportlab.pdfgen import canvas

JP_FONT = "HeiseiMin-W3"
_FONT_REGISTERED = False


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as one acceptance criterion"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            marker = None
            item = getattr(rep, "item", None)
            keywords = getattr(rep, "keywords", {})
            if "acceptance" in keywords:
                # recover the criterion label stashed in the test id map
                marker = _ACCEPTANCE_LABELS.get(rep.nodeid.split("::")[-1], rep.nodeid)
            if marker:
                status = "PASS" if outcome == "passed" else "FAIL"
                lines.append(f"[{status}] {marker}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


_ACCEPTANCE_LABELS: dict[str, str] = {}


def register_acceptance(test_name: str, label: str) -> None:
    _ACCEPTANCE_LABELS[test_name] = label


def _ensure_font() -> None:
    global _FONT_REGISTERED
    if not _FONT_REGISTERED:
        pdfmetrics.registerFont(UnicodeCIDFont(JP_FONT))
        _FONT_REGISTERED = True


def make_test_image(width: int, height: int, seed: int = 0) -> Image.Image:
    """Deterministic non-uniform RGB image (seed-colored blocks)."""
    rng = random.Random(seed)
    img = Image.new("RGB", (width, height))
    block = max(4, min(width, height) // 8)
    for by in range(0, height, block):
        for bx in range(0, width, block):
            color = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
            img.paste(color, (bx, by, min(bx + block, width), min(by + block, height)))
    return img


@dataclass
class PageSpec:
    size: tuple[float, float] = (595.2756, 841.8898)  # A4 points
    # (x, y, w, h) in points, drawn from a deterministic seed
    images: list[tuple[float, float, float, float]] = field(default_factory=list)
    # (x, y, text, size); Japanese glyphs use the CID font automatically
    texts: list[tuple[float, float, str, float]] = field(default_factory=list)


def build_pdf(pages: list[PageSpec], image_seed: int = 0) -> bytes:
    """Write a fixture PDF; byte-stable for identical arguments."""
    _ensure_font()
    buf = io.BytesIO()
    c = canvas.Canvas(buf, pagesize=pages[0].size, invariant=1)
    seed = image_seed
    for page in pages:
        c.setPageSize(page.size)
        for x, y, w, h in page.images:
            img = make_test_image(max(2, int(w)), max(2, int(h)), seed=seed)
            seed += 1
            c.drawImage(ImageReader(img), x, y, width=w, height=h)
        for x, y, text, size in page.texts:
            font = JP_FONT if any(ord(ch) > 0x2E80 for ch in text) else "Helvetica"
            c.setFont(font, size)
            c.drawString(x, y, text)
        c.showPage()
    c.save()
    return buf.getvalue()


def simple_doc(
    n_pages: int = 1,
    first_page_images: int = 1,
    texts: list[str] | None = None,
    image_seed: int = 0,
    page_size: tuple[float, float] = (400.0, 500.0),
) -> bytes:
    """Small document: images across the top, text lines below."""
    pages = []
    for p in range(n_pages):
        spec = PageSpec(size=page_size)
        if p == 0:
            for i in range(first_page_images):
                spec.images.append((40.0 + 140.0 * i, 330.0, 120.0, 100.0))
            for j, text in enumerate(texts or []):
                spec.texts.append((40.0, 280.0 - 30.0 * j, text, 12.0))
        else:
            spec.texts.append((40.0, 400.0, f"page {p + 1} body text", 10.0))
        pages.append(spec)
    return build_pdf(pages, image_seed=image_seed)


JP_SENTENCES = [
    "桜の写真が掲載されています。",
    "地域の祭りについて紹介します。",
    "この図は調査結果を示しています。",
    "詳細は次のページをご覧ください。",
    "문화",  # non-target script line, dropped by cleaning
]


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> Path:
    """The 30-document selection corpus: 10 over-length, 5 image-free,
    15 valid; labels are encoded in the file names."""
    root = tmp_path_factory.mktemp("corpus30")
    for i in range(10):
        data = simple_doc(n_pages=6 + i % 3, first_page_images=1, image_seed=100 + i)
        (root / f"overlong_{i:02d}.pdf").write_bytes(data)
    for i in range(5):
        data = simple_doc(
            n_pages=1 + i % 3,
            first_page_images=0,
            texts=["text only document", JP_SENTENCES[0]],
            image_seed=200 + i,
        )
        (root / f"noimage_{i:02d}.pdf").write_bytes(data)
    for i in range(15):
        data = simple_doc(
            n_pages=1 + i % 5,
            first_page_images=1 + i % 2,
            texts=[JP_SENTENCES[i % 4], JP_SENTENCES[(i + 1) % 4]],
            image_seed=300 + i,
        )
        (root / f"valid_{i:02d}.pdf").write_bytes(data)
    return root


@pytest.fixture()
def small_corpus(tmp_path) -> Path:
    """Six-document corpus for fast pipeline tests."""
    root = tmp_path / "corpus"
    root.mkdir()
    for i in range(6):
        data = simple_doc(
            n_pages=1 + i % 2,
            first_page_images=1,
            texts=[JP_SENTENCES[i % 4], JP_SENTENCES[(i + 2) % 4]],
            image_seed=i,
        )
        (root / f"doc_{i}.pdf").write_bytes(data)
    return root
