"""Random-access PDF reader: cross-reference tables, page tree, streams.

Handles classic xref tables, cross-reference streams, and object
streams, with a brute-force object scan as the fallback for files
whose xref machinery is broken. Filters: Flate (with PNG predictors),
ASCII85, ASCIIHex, RunLength; DCT data is left encoded for the image
decoder.
"""

from __future__ import annotations

import base64
import re
import zlib

from .objects import Lexer, Name, PdfSyntaxError, Ref, StreamExtent


class PdfParseError(ValueError):
    pass


_OBJ_RE = re.compile(rb"(?<![0-9])(\d{1,10})\s+(\d{1,5})\s+obj\b")
WHITESPACE_SET = frozenset(b"\x00\t\n\x0c\r ")


def _apply_png_predictor(data: bytes, columns: int, colors: int, bpc: int) -> bytes:
    stride = (columns * colors * bpc + 7) // 8
    out = bytearray()
    prev = bytes(stride)
    pos = 0
    bpp = max(1, (colors * bpc + 7) // 8)
    while pos + 1 + stride <= len(data):
        ftype = data[pos]
        row = bytearray(data[pos + 1 : pos + 1 + stride])
        pos += 1 + stride
        if ftype == 1:  # Sub
            for i in range(bpp, stride):
                row[i] = (row[i] + row[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            for i in range(stride):
                row[i] = (row[i] + prev[i]) & 0xFF
        elif ftype == 3:  # Average
            for i in range(stride):
                left = row[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + ((left + prev[i]) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                a = row[i - bpp] if i >= bpp else 0
                b = prev[i]
                c = prev[i - bpp] if i >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
                row[i] = (row[i] + pred) & 0xFF
        prev = bytes(row)
        out += row
    return bytes(out)


def _rle_decode(data: bytes) -> bytes:
    out = bytearray()
    i = 0
    while i < len(data):
        length = data[i]
        if length == 128:
            break
        if length < 128:
            out += data[i + 1 : i + 2 + length]
            i += 2 + length
        else:
            out += data[i + 1 : i + 2] * (257 - length)
            i += 2
    return bytes(out)


class PdfDocument:
    """Parsed PDF with lazy object access.

    Raises PdfParseError from the constructor when no catalog or page
    tree can be located; individual object lookups degrade to None.
    """

    def __init__(self, data: bytes):
        if not isinstance(data, (bytes, bytearray)):
            raise PdfParseError("input is not a byte sequence")
        self.data = bytes(data)
        if b"%PDF" not in self.data[:1024]:
            raise PdfParseError("missing %PDF header")
        self._offsets: dict[int, int] = {}
        self._compressed: dict[int, tuple[int, int]] = {}  # num -> (objstm num, index)
        self._cache: dict[int, object] = {}
        self._trailer: dict = {}
        try:
            self._load_xref()
        except Exception:
            self._offsets = {}
        if not self._offsets or "Root" not in self._trailer:
            self._brute_scan()
        self._catalog = self.resolve(self._trailer.get("Root"))
        if not isinstance(self._catalog, dict):
            self._catalog = self._find_catalog_by_scan()
        if self._catalog is None:
            raise PdfParseError("no document catalog")
        self._pages = self._collect_pages()
        if not self._pages:
            raise PdfParseError("no pages")

    # -- xref -----------------------------------------------------------

    def _load_xref(self) -> None:
        tail = self.data[-2048:]
        m = None
        for m in re.finditer(rb"startxref\s+(\d+)", tail):
            pass
        if m is None:
            raise PdfParseError("startxref not found")
        offset = int(m.group(1))
        seen = set()
        while offset and offset not in seen and 0 <= offset < len(self.data):
            seen.add(offset)
            lex = Lexer(self.data, offset)
            if lex.try_keyword(b"xref"):
                trailer = self._parse_xref_table(lex)
            else:
                trailer = self._parse_xref_stream(offset)
            if not self._trailer:
                self._trailer = dict(trailer)
            else:
                for k, v in trailer.items():
                    self._trailer.setdefault(k, v)
            nxt = trailer.get("Prev")
            offset = int(nxt) if isinstance(nxt, (int, float)) else 0

    def _parse_xref_table(self, lex: Lexer) -> dict:
        while True:
            lex.skip_ws()
            if lex.try_keyword(b"trailer"):
                trailer = lex.parse_object()
                if not isinstance(trailer, dict):
                    raise PdfParseError("bad trailer")
                # hybrid files: /XRefStm points at an xref stream
                if "XRefStm" in trailer:
                    try:
                        self._parse_xref_stream(int(trailer["XRefStm"]))
                    except Exception:
                        pass
                return trailer
            start = lex.parse_object()
            count = lex.parse_object()
            if not isinstance(start, int) or not isinstance(count, int):
                raise PdfParseError("bad xref subsection header")
            lex.skip_ws()
            entry_re = re.compile(rb"(\d{10})\s+(\d{5})\s+([nf])\s*")
            for i in range(count):
                m = entry_re.match(self.data, lex.pos)
                if m is None:
                    raise PdfParseError("truncated xref entry")
                num = start + i
                if m.group(3) == b"n" and num not in self._offsets and num not in self._compressed:
                    self._offsets[num] = int(m.group(1))
                lex.pos = m.end()

    def _parse_xref_stream(self, offset: int) -> dict:
        lex = Lexer(self.data, offset)
        lex.skip_ws()
        num = lex.parse_object()
        gen = lex.parse_object()
        if not isinstance(num, int) or not isinstance(gen, int) or not lex.try_keyword(b"obj"):
            raise PdfParseError("not an xref stream")
        obj = lex.parse_object()
        if not isinstance(obj, StreamExtent):
            raise PdfParseError("xref object is not a stream")
        d = obj.dictionary
        raw = self._stream_bytes(obj)
        content = self._decode_filters(raw, d)
        w = [int(x) for x in self.resolve(d.get("W", []))]
        if len(w) < 3:
            raise PdfParseError("bad /W in xref stream")
        size = int(self.resolve(d.get("Size", 0)))
        index = [int(x) for x in self.resolve(d.get("Index", [0, size]))]
        entry_len = sum(w)
        pos = 0

        def field(buf: bytes, width: int, default: int) -> int:
            if width == 0:
                return default
            return int.from_bytes(buf[:width], "big")

        for i in range(0, len(index), 2):
            start, count = index[i], index[i + 1]
            for j in range(count):
                if pos + entry_len > len(content):
                    break
                buf = content[pos : pos + entry_len]
                pos += entry_len
                ftype = field(buf, w[0], 1)
                f2 = field(buf[w[0] :], w[1], 0)
                f3 = field(buf[w[0] + w[1] :], w[2], 0)
                objnum = start + j
                if objnum in self._offsets or objnum in self._compressed:
                    continue
                if ftype == 1:
                    self._offsets[objnum] = f2
                elif ftype == 2:
                    self._compressed[objnum] = (f2, f3)
        return d

    def _brute_scan(self) -> None:
        for m in _OBJ_RE.finditer(self.data):
            num = int(m.group(1))
            self._offsets[num] = m.start()  # last definition wins
        if not self._trailer:
            for m in re.finditer(rb"trailer", self.data):
                try:
                    lex = Lexer(self.data, m.end())
                    t = lex.parse_object()
                    if isinstance(t, dict):
                        self._trailer.update(t)
                except Exception:
                    continue

    def _find_catalog_by_scan(self):
        self._brute_scan()
        for num in sorted(self._offsets):
            obj = self.get(num)
            if isinstance(obj, dict) and obj.get("Type") == "Catalog":
                return obj
        return None

    # -- objects ----------------------------------------------------------

    def get(self, num: int):
        if num in self._cache:
            return self._cache[num]
        self._cache[num] = None  # cycle guard
        obj = None
        if num in self._offsets:
            obj = self._parse_at(num, self._offsets[num])
        elif num in self._compressed:
            obj = self._parse_compressed(num)
        self._cache[num] = obj
        return obj

    def _parse_at(self, num: int, offset: int):
        if not (0 <= offset < len(self.data)):
            return None
        try:
            lex = Lexer(self.data, offset)
            lex.skip_ws()
            got_num = lex.parse_object()
            lex.parse_object()  # generation
            if got_num != num or not lex.try_keyword(b"obj"):
                # mis-aimed offset: rescan for the object header
                m = re.search(rb"(?<![0-9])%d\s+\d+\s+obj\b" % num, self.data)
                if not m:
                    return None
                lex = Lexer(self.data, m.end())
            obj = lex.parse_object()
            if isinstance(obj, StreamExtent):
                obj.raw_end = self._locate_stream_end(obj)
            return obj
        except Exception:
            return None

    def _parse_compressed(self, num: int):
        stm_num, idx = self._compressed[num]
        try:
            stm = self.get(stm_num)
            if not isinstance(stm, StreamExtent):
                return None
            content = self.stream_content(stm)
            first = int(self.resolve(stm.dictionary.get("First", 0)))
            count = int(self.resolve(stm.dictionary.get("N", 0)))
            lex = Lexer(content, 0)
            pairs = []
            for _ in range(count):
                lex.skip_ws()
                onum = lex.parse_object()
                ooff = lex.parse_object()
                pairs.append((int(onum), int(ooff)))
            for onum, ooff in pairs:
                if onum == num:
                    inner = Lexer(content, first + ooff)
                    return inner.parse_object()
        except Exception:
            return None
        return None

    def _locate_stream_end(self, stm: StreamExtent) -> int:
        length = self.resolve(stm.dictionary.get("Length"))
        start = stm.raw_start
        if isinstance(length, (int, float)):
            end = start + int(length)
            probe = self.data[end : end + 20]
            if b"endstream" in probe or end >= len(self.data):
                return min(end, len(self.data))
        idx = self.data.find(b"endstream", start)
        if idx < 0:
            return len(self.data)
        end = idx
        while end > start and self.data[end - 1 : end] in (b"\r", b"\n"):
            end -= 1
        return end

    def resolve(self, obj, _depth: int = 0):
        while isinstance(obj, Ref) and _depth < 32:
            obj = self.get(obj.num)
            _depth += 1
        return obj

    # -- streams ----------------------------------------------------------

    def _stream_bytes(self, stm: StreamExtent) -> bytes:
        if stm.raw_end < 0:
            stm.raw_end = self._locate_stream_end(stm)
        return self.data[stm.raw_start : stm.raw_end]

    def _decode_filters(self, raw: bytes, d: dict, stop_at_dct: bool = True) -> bytes:
        filters = self.resolve(d.get("Filter"))
        if filters is None:
            return raw
        if isinstance(filters, (Name, str)):
            filters = [filters]
        parms = self.resolve(d.get("DecodeParms"))
        if isinstance(parms, dict) or parms is None:
            parms = [parms] * len(filters)
        data = raw
        for f, p in zip(filters, parms):
            fname = str(f)
            if fname in ("FlateDecode", "Fl"):
                data = zlib.decompress(data)
                p = self.resolve(p)
                if isinstance(p, dict) and int(self.resolve(p.get("Predictor", 1)) or 1) >= 10:
                    data = _apply_png_predictor(
                        data,
                        int(self.resolve(p.get("Columns", 1)) or 1),
                        int(self.resolve(p.get("Colors", 1)) or 1),
                        int(self.resolve(p.get("BitsPerComponent", 8)) or 8),
                    )
            elif fname in ("ASCII85Decode", "A85"):
                data = base64.a85decode(data.strip(), adobe=True, ignorechars=b" \t\r\n")
            elif fname in ("ASCIIHexDecode", "AHx"):
                text = data.split(b">")[0]
                text = bytes(c for c in text if c not in WHITESPACE_SET)
                if len(text) % 2:
                    text += b"0"
                data = bytes.fromhex(text.decode("ascii"))
            elif fname in ("RunLengthDecode", "RL"):
                data = _rle_decode(data)
            elif fname in ("DCTDecode", "DCT", "JPXDecode"):
                if stop_at_dct:
                    return data  # hand encoded image data to the caller
                raise PdfSyntaxError(f"cannot decode filter {fname}")
            else:
                raise PdfSyntaxError(f"unsupported filter {fname}")
        return data

    def stream_content(self, stm: StreamExtent) -> bytes:
        """Fully decoded stream payload (content streams, xref, objstm)."""
        return self._decode_filters(self._stream_bytes(stm), stm.dictionary)

    def image_filters(self, stm: StreamExtent) -> list[str]:
        f = self.resolve(stm.dictionary.get("Filter"))
        if f is None:
            return []
        if isinstance(f, (Name, str)):
            return [str(f)]
        return [str(x) for x in f]

    # -- page tree ----------------------------------------------------------

    def _collect_pages(self) -> list[dict]:
        pages: list[dict] = []
        root = self.resolve(self._catalog.get("Pages"))
        inheritable = ("MediaBox", "Resources", "Rotate", "CropBox")

        def walk(node, inherited: dict, depth: int, seen: frozenset):
            if not isinstance(node, dict) or depth > 64 or len(pages) > 100_000:
                return
            attrs = dict(inherited)
            for key in inheritable:
                if key in node:
                    attrs[key] = node[key]
            ntype = node.get("Type")
            if ntype == "Page" or ("Kids" not in node and ntype != "Pages"):
                page = dict(node)
                for key in inheritable:
                    page.setdefault(key, attrs.get(key))
                pages.append(page)
                return
            kids = self.resolve(node.get("Kids", []))
            if not isinstance(kids, list):
                return
            for kid in kids:
                kid_id = (kid.num, kid.gen) if isinstance(kid, Ref) else id(kid)
                if kid_id in seen:
                    continue
                walk(self.resolve(kid), attrs, depth + 1, seen | {kid_id})

        walk(root, {}, 0, frozenset())
        return pages

    @property
    def page_count(self) -> int:
        return len(self._pages)

    def page(self, index: int) -> dict:
        return self._pages[index]

    def page_media_box(self, index: int) -> tuple[float, float, float, float]:
        box = self.resolve(self._pages[index].get("MediaBox"))
        try:
            x0, y0, x1, y1 = (float(self.resolve(v)) for v in box)
        except Exception:
            x0, y0, x1, y1 = 0.0, 0.0, 612.0, 792.0  # US Letter fallback
        return (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))

    def page_content(self, index: int) -> bytes:
        contents = self.resolve(self._pages[index].get("Contents"))
        if contents is None:
            return b""
        if isinstance(contents, StreamExtent):
            parts = [contents]
        elif isinstance(contents, list):
            parts = [self.resolve(c) for c in contents]
        else:
            return b""
        out = []
        for part in parts:
            if isinstance(part, StreamExtent):
                try:
                    out.append(self.stream_content(part))
                except Exception:
                    continue
        return b"\n".join(out)

    def page_xobjects(self, index: int) -> dict[str, StreamExtent]:
        """Name -> XObject stream map from the page's resources."""
        res = self.resolve(self._pages[index].get("Resources"))
        return self._xobjects_of(res)

    def _xobjects_of(self, resources) -> dict[str, StreamExtent]:
        out: dict[str, StreamExtent] = {}
        if not isinstance(resources, dict):
            return out
        xobjs = self.resolve(resources.get("XObject"))
        if not isinstance(xobjs, dict):
            return out
        for name, ref in xobjs.items():
            obj = self.resolve(ref)
            if isinstance(obj, StreamExtent):
                out[str(name)] = obj
        return out

    def count_page_images(self, index: int) -> int:
        """Image XObjects reachable from a page, through nested forms."""
        res = self.resolve(self._pages[index].get("Resources"))
        seen_ids: set[int] = set()
        count = 0
        stack = [res]
        depth = 0
        while stack and depth < 10_000:
            depth += 1
            resources = stack.pop()
            for obj in self._xobjects_of(resources).values():
                if id(obj) in seen_ids:
                    continue
                seen_ids.add(id(obj))
                subtype = self.resolve(obj.dictionary.get("Subtype"))
                if subtype == "Image":
                    count += 1
                elif subtype == "Form":
                    stack.append(self.resolve(obj.dictionary.get("Resources")))
        return count

    def page_fonts(self, index: int) -> dict[str, dict]:
        res = self.resolve(self._pages[index].get("Resources"))
        out: dict[str, dict] = {}
        if isinstance(res, dict):
            fonts = self.resolve(res.get("Font"))
            if isinstance(fonts, dict):
                for name, ref in fonts.items():
                    fd = self.resolve(ref)
                    if isinstance(fd, dict):
                        out[str(name)] = fd
        return out
