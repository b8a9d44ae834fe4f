"""Page extraction: rasterize, locate regions, recognize text, crop images.

Layout and recognition go through provider interfaces; the builtin
fallbacks in this module read the PDF's own structure (image placements
and the text layer) so the pipeline runs without any model service.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from PIL import Image

from .errors import InvalidDpi, ParseFailure, RegionOutOfBounds, RenderFailure
from .pdfio import PdfDocument, PdfParseError, interpret_page, render_page

MIN_CROP_PX = 50  # crops narrower or shorter than this are dropped
MERGE_IOU_THRESHOLD = 0.9

BBox = tuple[int, int, int, int]


class RegionKind(str, Enum):
    IMAGE = "ImageRegion"
    TEXT = "TextRegion"


@dataclass(frozen=True)
class PageImage:
    doc_id: str
    page_index: int
    width_px: int
    height_px: int
    dpi: int
    pixels: Path  # lossless PNG


@dataclass(frozen=True)
class Region:
    region_id: str
    kind: RegionKind
    bbox: BBox  # x0, y0, x1, y1 in page pixels
    confidence: float
    reading_order_index: int


@dataclass(frozen=True)
class TextBlock:
    region_id: str
    content: str
    recognizer_confidence: float
    target_script_ratio: float


@dataclass(frozen=True)
class ExtractedImage:
    region_id: str
    crop: Path
    width_px: int
    height_px: int


# -- geometry -----------------------------------------------------------


def clip_bbox(bbox, width: int, height: int) -> BBox | None:
    x0 = max(0, int(round(bbox[0])))
    y0 = max(0, int(round(bbox[1])))
    x1 = min(width, int(round(bbox[2])))
    y1 = min(height, int(round(bbox[3])))
    if x0 >= x1 or y0 >= y1:
        return None
    return (x0, y0, x1, y1)


def bbox_iou(a: BBox, b: BBox) -> float:
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    if ix0 >= ix1 or iy0 >= iy1:
        return 0.0
    inter = (ix1 - ix0) * (iy1 - iy0)
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _merge_overlapping(regions: list[tuple[RegionKind, BBox, float]]):
    """Union same-kind boxes whose IoU exceeds the merge threshold."""
    merged: list[tuple[RegionKind, BBox, float]] = []
    for kind, bbox, conf in regions:
        for i, (mkind, mbbox, mconf) in enumerate(merged):
            if mkind is kind and bbox_iou(bbox, mbbox) > MERGE_IOU_THRESHOLD:
                union = (
                    min(bbox[0], mbbox[0]),
                    min(bbox[1], mbbox[1]),
                    max(bbox[2], mbbox[2]),
                    max(bbox[3], mbbox[3]),
                )
                merged[i] = (mkind, union, max(conf, mconf))
                break
        else:
            merged.append((kind, bbox, conf))
    return merged

def assign_reading_order(boxes: list[BBox]) -> list[int]:
    """Reading-order indices: top-to-bottom, then left-to-right, by the
    bbox upper-left corner."""
    order = sorted(range(len(boxes)), key=lambda i: (boxes[i][1], boxes[i][0]))
    indices = [0] * len(boxes)
    for rank, i in enumerate(order):
        indices[i] = rank
    return indices


# -- operations -----------------------------------------------------------


def rasterize(doc: bytes, page_index: int, dpi: int, out_path: Path, doc_id: str = "") -> PageImage:
    """Render one page to a lossless PNG at the given dpi."""
    if dpi <= 0:
        raise InvalidDpi(f"dpi must be positive, got {dpi}")
    try:
        pdf = PdfDocument(doc)
    except PdfParseError as exc:
        raise RenderFailure(str(exc)) from exc
    if not (0 <= page_index < pdf.page_count):
        raise RenderFailure(f"page {page_index} out of range (document has {pdf.page_count})")
    try:
        img = render_page(pdf, page_index, dpi)
    except Exception as exc:
        raise RenderFailure(f"content stream render failed: {exc}") from exc
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    img.save(tmp, "PNG")
    tmp.replace(out_path)
    return PageImage(doc_id, page_index, img.width, img.height, dpi, out_path)


def analyze_layout(page: PageImage, provider) -> list[Region]:
    """Run a layout provider and normalize its raw regions: clip to the
    page, merge near-duplicates, assign reading order."""
    raw = provider.analyze_page(page)
    cleaned: list[tuple[RegionKind, BBox, float]] = []
    for item in raw:
        kind = RegionKind(item.kind) if not isinstance(item.kind, RegionKind) else item.kind
        bbox = clip_bbox(item.bbox, page.width_px, page.height_px)
        if bbox is None:
            continue
        conf = min(1.0, max(0.0, float(item.confidence)))
        cleaned.append((kind, bbox, conf))
    merged = _merge_overlapping(cleaned)
    order = assign_reading_order([bbox for _, bbox, _ in merged])
    regions = [
        Region(
            region_id=f"{page.doc_id}_p{page.page_index}_r{order[i]}",
            kind=kind,
            bbox=bbox,
            confidence=conf,
            reading_order_index=order[i],
        )
        for i, (kind, bbox, conf) in enumerate(merged)
    ]
    return sorted(regions, key=lambda r: r.reading_order_index)


def recognize_text(page: PageImage, regions: list[Region], provider) -> list[TextBlock]:
    """Recognize text regions, in reading order. Regions that yield no
    text produce no block."""
    for region in regions:
        if region.kind is not RegionKind.TEXT:
            raise RegionOutOfBounds(f"{region.region_id} is not a text region")
        x0, y0, x1, y1 = region.bbox
        if x0 < 0 or y0 < 0 or x1 > page.width_px or y1 > page.height_px:
            raise RegionOutOfBounds(f"{region.region_id} lies outside the page")
    ordered = sorted(regions, key=lambda r: r.reading_order_index)
    results = provider.recognize(page, ordered)
    blocks = []
    for region, item in zip(ordered, results):
        text = item.text
        if not text or not text.strip():
            continue
        blocks.append(
            TextBlock(
                region_id=region.region_id,
                content=text,
                recognizer_confidence=min(1.0, max(0.0, float(item.confidence))),
                target_script_ratio=target_script_ratio(text),
            )
        )
    return blocks


def crop_images(
    page: PageImage, regions: list[Region], out_dir: Path, jpeg_quality: int = 90
) -> tuple[list[ExtractedImage], int]:
    """Crop image regions to JPEG files named {doc_id}_p{page}_r{n}.jpg.

    Crops with width or height below MIN_CROP_PX are dropped; returns
    the kept crops and the dropped count."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    page_img = Image.open(page.pixels).convert("RGB")
    kept: list[ExtractedImage] = []
    dropped = 0
    for region in sorted(regions, key=lambda r: r.reading_order_index):
        if region.kind is not RegionKind.IMAGE:
            continue
        x0, y0, x1, y1 = region.bbox
        w, h = x1 - x0, y1 - y0
        if w < MIN_CROP_PX or h < MIN_CROP_PX:
            dropped += 1
            continue
        crop = page_img.crop((x0, y0, x1, y1))
        path = out_dir / f"{page.doc_id}_p{page.page_index}_r{region.reading_order_index}.jpg"
        tmp = path.with_suffix(".jpg.tmp")
        crop.save(tmp, "JPEG", quality=jpeg_quality)
        tmp.replace(path)
        kept.append(ExtractedImage(region.region_id, path, w, h))
    return kept, dropped


# -- text cleaning -----------------------------------------------------------

_TARGET_PUNCT = set("、。！？「」『』（）・ー〜：；％") | set(
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
)


def _char_class(ch: str) -> str:
    if ch.isspace():
        return "space"
    cp = ord(ch)
    if 0x3040 <= cp <= 0x30FF:  # hiragana + katakana
        return "target"
    if 0x4E00 <= cp <= 0x9FFF or 0x3400 <= cp <= 0x4DBF:  # kanji
        return "target"
    if ch.isascii() and ch.isalnum():
        return "target"
    if ch in _TARGET_PUNCT:
        return "target"
    return "other"


def target_script_ratio(text: str) -> float:
    """Share of non-space characters in the kept script set: kana,
    kanji, ASCII alphanumerics, and common punctuation."""
    counted = 0
    matched = 0
    for ch in text:
        cls = _char_class(ch)
        if cls == "space":
            continue
        counted += 1
        if cls == "target":
            matched += 1
    return matched / counted if counted else 0.0


def _is_cjk_char(ch: str) -> bool:
    cp = ord(ch)
    return 0x2E80 <= cp <= 0x9FFF or 0xF900 <= cp <= 0xFAFF or 0xFF00 <= cp <= 0xFFEF


def join_hard_breaks(text: str) -> str:
    """Collapse line breaks inside a block: no separator when the break
    touches a CJK character, a single space otherwise."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        return ""
    out = lines[0]
    for nxt in lines[1:]:
        if out and (_is_cjk_char(out[-1]) or _is_cjk_char(nxt[0])):
            out += nxt
        else:
            out += " " + nxt
    return out


def clean_text(
    blocks: list[TextBlock], min_chars: int = 3, min_script_ratio: float = 0.5
) -> list[TextBlock]:
    """Normalize and filter recognized blocks: join hard line breaks,
    drop blocks shorter than min_chars or below the script-ratio floor."""
    cleaned: list[TextBlock] = []
    for block in blocks:
        content = join_hard_breaks(unicodedata.normalize("NFC", block.content)).strip()
        if len(content) < min_chars:
            continue
        ratio = target_script_ratio(content)
        if ratio < min_script_ratio:
            continue
        cleaned.append(replace(block, content=content, target_script_ratio=ratio))
    return cleaned


# -- builtin structural layout -----------------------------------------------


@dataclass(frozen=True)
class RawRegion:
    """Provider-level region before clipping and ordering."""

    kind: RegionKind
    bbox: tuple[float, float, float, float]
    confidence: float = 1.0


def builtin_layout(doc: bytes, page_index: int, dpi: int) -> list[RawRegion]:
    """Deterministic fallback layout from the PDF's own structure:
    image regions from placed image XObjects, text regions from
    text-layer line boxes, in pixel coordinates at the given dpi."""
    try:
        pdf = PdfDocument(doc)
        if not (0 <= page_index < pdf.page_count):
            raise ParseFailure(f"page {page_index} out of range")
        content = interpret_page(pdf, page_index)
        mb = pdf.page_media_box(page_index)
    except PdfParseError as exc:
        raise ParseFailure(str(exc)) from exc
    scale = dpi / 72.0

    def to_px(bbox):
        x0, y0, x1, y1 = bbox
        return (
            (x0 - mb[0]) * scale,
            (mb[3] - y1) * scale,
            (x1 - mb[0]) * scale,
            (mb[3] - y0) * scale,
        )

    regions = [RawRegion(RegionKind.IMAGE, to_px(img.bbox)) for img in content.images]
    regions += [RawRegion(RegionKind.TEXT, to_px(line.bbox)) for line in content.text_lines]
    return regions


def builtin_text_lines(doc: bytes, page_index: int, dpi: int):
    """Text-layer lines as (text, pixel bbox) pairs, for the builtin
    recognizer."""
    try:
        pdf = PdfDocument(doc)
        content = interpret_page(pdf, page_index)
        mb = pdf.page_media_box(page_index)
    except PdfParseError as exc:
        raise ParseFailure(str(exc)) from exc
    scale = dpi / 72.0
    out = []
    for line in content.text_lines:
        x0, y0, x1, y1 = line.bbox
        px = ((x0 - mb[0]) * scale, (mb[3] - y1) * scale, (x1 - mb[0]) * scale, (mb[3] - y0) * scale)
        out.append((line.text, px))
    return out
