"""Lexer and parser for the PDF object syntax (COS objects).

Covers the subset needed to walk page trees and content streams:
numbers, booleans, null, literal and hex strings, names, arrays,
dictionaries, indirect references, and stream extents. Byte strings
stay as ``bytes``; text decoding is a font-level concern.
"""

from __future__ import annotations

from dataclasses import dataclass


class PdfSyntaxError(ValueError):
    pass


class Name(str):
    """A PDF name (/Foo) — distinct from text strings."""

    __slots__ = ()


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


@dataclass
class StreamExtent:
    """Dictionary plus the byte range of the raw (still encoded) data."""

    dictionary: dict
    raw_start: int
    raw_end: int


WHITESPACE = b"\x00\t\n\x0c\r "
DELIMITERS = b"()<>[]{}/%"

_OCTAL = b"01234567"


def _is_regular(ch: int) -> bool:
    return ch not in WHITESPACE and ch not in DELIMITERS


class Lexer:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            if ch in WHITESPACE:
                self.pos += 1
            elif ch == 0x25:  # '%' comment to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def peek(self) -> int:
        if self.pos >= len(self.data):
            raise PdfSyntaxError("unexpected end of data")
        return self.data[self.pos]

    def read_keyword(self) -> bytes:
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and _is_regular(data[self.pos]):
            self.pos += 1
        if self.pos == start:
            raise PdfSyntaxError(f"expected keyword at offset {start}")
        return data[start : self.pos]

    def try_keyword(self, word: bytes) -> bool:
        self.skip_ws()
        end = self.pos + len(word)
        if self.data[self.pos : end] == word:
            if end >= len(self.data) or not _is_regular(self.data[end]):
                self.pos = end
                return True
        return False

    # -- object parsing -------------------------------------------------

    def parse_object(self):
        self.skip_ws()
        ch = self.peek()
        if ch == 0x3C:  # '<'
            if self.data[self.pos + 1 : self.pos + 2] == b"<":
                return self._parse_dict_or_stream()
            return self._parse_hex_string()
        if ch == 0x28:  # '('
            return self._parse_literal_string()
        if ch == 0x2F:  # '/'
            return self._parse_name()
        if ch == 0x5B:  # '['
            return self._parse_array()
        if ch in b"+-.0123456789":
            return self._parse_number_or_ref()
        word = self.read_keyword()
        if word == b"true":
            return True
        if word == b"false":
            return False
        if word == b"null":
            return None
        raise PdfSyntaxError(f"unexpected token {word!r} at offset {self.pos}")

    def _parse_number_or_ref(self):
        first = self._parse_number()
        if isinstance(first, int) and first >= 0:
            save = self.pos
            self.skip_ws()
            if self.pos < len(self.data) and self.data[self.pos] in b"0123456789":
                try:
                    second = self._parse_number()
                except PdfSyntaxError:
                    self.pos = save
                    return first
                if isinstance(second, int) and second >= 0 and self.try_keyword(b"R"):
                    return Ref(first, second)
            self.pos = save
        return first

    def _parse_number(self):
        start = self.pos
        data, n = self.data, len(self.data)
        if data[self.pos] in b"+-":
            self.pos += 1
        seen_dot = False
        while self.pos < n and (data[self.pos] in b"0123456789" or (data[self.pos] == 0x2E and not seen_dot)):
            if data[self.pos] == 0x2E:
                seen_dot = True
            self.pos += 1
        text = data[start : self.pos]
        if text in (b"", b"+", b"-", b".", b"+.", b"-."):
            raise PdfSyntaxError(f"bad number at offset {start}")
        if seen_dot:
            return float(text)
        return int(text)

    def _parse_name(self) -> Name:
        assert self.data[self.pos] == 0x2F
        self.pos += 1
        out = bytearray()
        data, n = self.data, len(self.data)
        while self.pos < n and _is_regular(data[self.pos]):
            ch = data[self.pos]
            if ch == 0x23 and self.pos + 2 < n:  # '#' hex escape
                try:
                    out.append(int(data[self.pos + 1 : self.pos + 3], 16))
                    self.pos += 3
                    continue
                except ValueError:
                    pass
            out.append(ch)
            self.pos += 1
        return Name(out.decode("latin-1"))

    def _parse_literal_string(self) -> bytes:
        assert self.data[self.pos] == 0x28
        self.pos += 1
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            if ch == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= n:
                    break
                esc = data[self.pos]
                if esc in _OCTAL:
                    digits = bytearray([esc])
                    self.pos += 1
                    while self.pos < n and len(digits) < 3 and data[self.pos] in _OCTAL:
                        digits.append(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                    continue
                mapped = {
                    0x6E: 0x0A, 0x72: 0x0D, 0x74: 0x09, 0x62: 0x08,
                    0x66: 0x0C, 0x28: 0x28, 0x29: 0x29, 0x5C: 0x5C,
                }.get(esc)
                if mapped is not None:
                    out.append(mapped)
                    self.pos += 1
                elif esc in b"\r\n":  # line continuation
                    self.pos += 1
                    if esc == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(esc)
                    self.pos += 1
                continue
            if ch == 0x28:
                depth += 1
            elif ch == 0x29:
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return bytes(out)
            out.append(ch)
            self.pos += 1
        raise PdfSyntaxError("unterminated literal string")

    def _parse_hex_string(self) -> bytes:
        assert self.data[self.pos] == 0x3C
        self.pos += 1
        digits = bytearray()
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            self.pos += 1
            if ch == 0x3E:  # '>'
                if len(digits) % 2:
                    digits.append(0x30)
                return bytes.fromhex(digits.decode("ascii"))
            if ch in b"0123456789abcdefABCDEF":
                digits.append(ch)
            elif ch in WHITESPACE:
                continue
            else:
                raise PdfSyntaxError(f"bad hex string char {ch:#x}")
        raise PdfSyntaxError("unterminated hex string")

    def _parse_array(self) -> list:
        assert self.data[self.pos] == 0x5B
        self.pos += 1
        items = []
        while True:
            self.skip_ws()
            if self.peek() == 0x5D:  # ']'
                self.pos += 1
                return items
            items.append(self.parse_object())

    def _parse_dict_or_stream(self):
        assert self.data[self.pos : self.pos + 2] == b"<<"
        self.pos += 2
        out: dict = {}
        while True:
            self.skip_ws()
            if self.data[self.pos : self.pos + 2] == b">>":
                self.pos += 2
                break
            key = self.parse_object()
            if not isinstance(key, Name):
                raise PdfSyntaxError(f"dictionary key is not a name: {key!r}")
            out[str(key)] = self.parse_object()
        save = self.pos
        if self.try_keyword(b"stream"):
            # EOL after 'stream' is CRLF or LF
            if self.data[self.pos : self.pos + 2] == b"\r\n":
                self.pos += 2
            elif self.data[self.pos : self.pos + 1] in (b"\n", b"\r"):
                self.pos += 1
            return StreamExtent(out, self.pos, -1)
        self.pos = save
        return out
