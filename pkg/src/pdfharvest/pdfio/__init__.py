"""Minimal PDF reading: object structure, content geometry, rasterization."""

from .content import PageContent, PlacedImage, TextLine, interpret_page
from .document import PdfDocument, PdfParseError
from .objects import Name, PdfSyntaxError, Ref, StreamExtent
from .raster import page_pixel_size, render_page

__all__ = [
    "Name",
    "PageContent",
    "PdfDocument",
    "PdfParseError",
    "PdfSyntaxError",
    "PlacedImage",
    "Ref",
    "StreamExtent",
    "TextLine",
    "interpret_page",
    "page_pixel_size",
    "render_page",
]
