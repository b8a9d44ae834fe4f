"""Deterministic page rasterizer.

Renders a page to an RGB bitmap sized media-box x dpi: embedded
images are decoded and pasted at their placed rectangles, text lines
are drawn as gray bands. Glyph-accurate text rendering is out of
scope — downstream consumers crop image regions and read text from
the text layer, so pixel fidelity matters only for image content and
geometry.
"""

from __future__ import annotations

import io
import zlib

from PIL import Image

from .content import PlacedImage, interpret_page
from .document import PdfDocument
from .objects import Name, StreamExtent

TEXT_BAND_COLOR = (120, 120, 120)
PLACEHOLDER_COLOR = (160, 160, 160)


def page_pixel_size(doc: PdfDocument, page_index: int, dpi: int) -> tuple[int, int]:
    x0, y0, x1, y1 = doc.page_media_box(page_index)
    scale = dpi / 72.0
    return (max(1, round((x1 - x0) * scale)), max(1, round((y1 - y0) * scale)))


def _decode_image_xobject(doc: PdfDocument, stm: StreamExtent) -> Image.Image | None:
    d = stm.dictionary
    try:
        width = int(doc.resolve(d.get("Width", 0)))
        height = int(doc.resolve(d.get("Height", 0)))
        if width <= 0 or height <= 0:
            return None
        filters = doc.image_filters(stm)
        payload = doc.stream_content(stm)  # decoded up to any DCT/JPX stage
        if any(f in ("DCTDecode", "DCT", "JPXDecode") for f in filters):
            img = Image.open(io.BytesIO(payload))
            img.load()
            return img.convert("RGB")
        bpc = int(doc.resolve(d.get("BitsPerComponent", 8)) or 8)
        cs = doc.resolve(d.get("ColorSpace"))
        if d.get("ImageMask") is True or bpc == 1:
            return Image.frombytes("1", (width, height), payload).convert("RGB")
        if isinstance(cs, list) and cs and str(doc.resolve(cs[0])) == "Indexed":
            base = str(doc.resolve(cs[1])) if len(cs) > 1 else "DeviceRGB"
            lookup = doc.resolve(cs[3]) if len(cs) > 3 else b""
            if isinstance(lookup, StreamExtent):
                lookup = doc.stream_content(lookup)
            img = Image.frombytes("P", (width, height), payload)
            if isinstance(lookup, bytes) and base == "DeviceRGB":
                img.putpalette(lookup[: 256 * 3])
            return img.convert("RGB")
        cs_name = str(cs) if isinstance(cs, (Name, str)) else "DeviceRGB"
        mode = {"DeviceRGB": "RGB", "DeviceGray": "L", "CalRGB": "RGB", "CalGray": "L", "DeviceCMYK": "CMYK"}.get(cs_name)
        if mode is None:
            return None
        expected = width * height * len(mode)
        if len(payload) < expected:
            payload = payload + b"\x00" * (expected - len(payload))
        return Image.frombytes(mode, (width, height), payload[:expected]).convert("RGB")
    except (OSError, ValueError, zlib.error):
        return None


def _paste_placed(canvas: Image.Image, placed: PlacedImage, doc: PdfDocument, to_px) -> None:
    x0, y0, x1, y1 = placed.bbox
    px0, py1 = to_px(x0, y0)
    px1, py0 = to_px(x1, y1)
    w = max(1, round(px1 - px0))
    h = max(1, round(py1 - py0))
    img = _decode_image_xobject(doc, placed.stream)
    if img is None:
        canvas.paste(PLACEHOLDER_COLOR, (round(px0), round(py0), round(px0) + w, round(py0) + h))
        return
    # vertical/horizontal flips from the CTM; rotation collapses to the bbox
    a, b, c, d, e, f = placed.ctm
    if d < 0:
        img = img.transpose(Image.Transpose.FLIP_TOP_BOTTOM)
    if a < 0:
        img = img.transpose(Image.Transpose.FLIP_LEFT_RIGHT)
    img = img.resize((w, h), Image.Resampling.LANCZOS)
    canvas.paste(img, (round(px0), round(py0)))


def render_page(doc: PdfDocument, page_index: int, dpi: int) -> Image.Image:
    mb = doc.page_media_box(page_index)
    scale = dpi / 72.0
    width_px, height_px = page_pixel_size(doc, page_index, dpi)

    def to_px(x: float, y: float) -> tuple[float, float]:
        return ((x - mb[0]) * scale, (mb[3] - y) * scale)

    canvas = Image.new("RGB", (width_px, height_px), (255, 255, 255))
    page = interpret_page(doc, page_index)
    for line in page.text_lines:
        x0, y0, x1, y1 = line.bbox
        px0, py1 = to_px(x0, y0)
        px1, py0 = to_px(x1, y1)
        box = (
            max(0, round(px0)),
            max(0, round(py0)),
            min(width_px, round(px1)),
            min(height_px, round(py1)),
        )
        if box[0] < box[2] and box[1] < box[3]:
            canvas.paste(TEXT_BAND_COLOR, box)
    for placed in page.images:
        _paste_placed(canvas, placed, doc, to_px)
    return canvas
