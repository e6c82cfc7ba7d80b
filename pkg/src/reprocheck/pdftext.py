"""Plain-text extraction from PDF files using only the standard library.

Scope: uncompressed or Flate/ASCII85-compressed content streams, the text
operators produced by mainstream typesetters (BT/ET, Td/TD/Tm/T*, Tj/TJ/'/"),
one- and two-column layouts. Pages inside object streams are expanded;
encrypted documents are rejected up front. Exotic filters (LZW, JBIG2, DCT)
make a stream unreadable and are reported as warnings rather than errors, so
a partially extractable document still yields its readable pages.
"""

from __future__ import annotations

import base64
import logging
import re
import zlib
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"

# WinAnsi code points that differ from Latin-1 in the 0x80-0x9f range.
_WINANSI_FIXUPS = {
    0x85: "…", 0x8e: "Ž", 0x91: "‘", 0x92: "’",
    0x93: "“", 0x94: "”", 0x96: "–", 0x97: "—",
    0x99: "™", 0x9e: "ž",
}

_LINE_Y_TOLERANCE = 2.0
_COLUMN_GAP_MIN = 50.0
_COLUMN_MIN_LINES = 3
_WORD_GAP_ADJUSTMENT = -180  # TJ kern offsets below this act as a word break
_SEAMLESS_GAP_MAX = 0.5  # runs closer than this are pieces of one word, not neighbors


class PdfError(Exception):
    pass


class MalformedPdfError(PdfError):
    pass


class EncryptedDocumentError(PdfError):
    pass


class _UnsupportedFilter(PdfError):
    pass


@dataclass(frozen=True)
class ExtractedText:
    text: str
    n_pages: int
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class _Ref:
    num: int
    gen: int


@dataclass(frozen=True)
class _Keyword:
    name: str


@dataclass
class _Stream:
    meta: dict
    raw: bytes


class _Lexer:
    """Tokenizer for the object syntax shared by document bodies and content streams."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            b = data[self.pos]
            if b in _WHITESPACE:
                self.pos += 1
            elif b == 0x25:  # '%' comment runs to end of line
                eol = data.find(b"\n", self.pos)
                self.pos = n if eol < 0 else eol + 1
            else:
                return

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.data)

    def read_object(self):
        self.skip_ws()
        data = self.data
        if self.pos >= len(data):
            raise MalformedPdfError("unexpected end of data")
        b = data[self.pos]
        if b == 0x2F:  # /
            return self._read_name()
        if b == 0x28:  # (
            return self._read_literal_string()
        if b == 0x3C:  # < or <<
            if data[self.pos : self.pos + 2] == b"<<":
                return self._read_dict()
            return self._read_hex_string()
        if b == 0x5B:  # [
            return self._read_array()
        if b in b"+-.0123456789":
            return self._read_number_or_ref()
        return self._read_keyword()

    def _read_name(self) -> str:
        self.pos += 1
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos] not in _WHITESPACE + _DELIMITERS:
            self.pos += 1
        raw = data[start : self.pos]
        if b"#" in raw:
            raw = re.sub(rb"#([0-9a-fA-F]{2})", lambda m: bytes([int(m.group(1), 16)]), raw)
        return raw.decode("latin-1")

    def _read_literal_string(self) -> bytes:
        data = self.data
        self.pos += 1
        depth = 1
        out = bytearray()
        while self.pos < len(data):
            b = data[self.pos]
            if b == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= len(data):
                    break
                e = data[self.pos]
                self.pos += 1
                if e in b"nrtbf":
                    out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[e])
                elif e in b"01234567":
                    digits = chr(e)
                    while (
                        len(digits) < 3
                        and self.pos < len(data)
                        and data[self.pos] in b"01234567"
                    ):
                        digits += chr(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif e in b"\r\n":  # line continuation
                    if e == 0x0D and self.pos < len(data) and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(e)
                continue
            if b == 0x28:
                depth += 1
            elif b == 0x29:
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return bytes(out)
            out.append(b)
            self.pos += 1
        raise MalformedPdfError("unterminated string")

    def _read_hex_string(self) -> bytes:
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise MalformedPdfError("unterminated hex string")
        digits = re.sub(rb"[^0-9a-fA-F]", b"", self.data[self.pos + 1 : end])
        self.pos = end + 1
        if len(digits) % 2:
            digits += b"0"
        return bytes.fromhex(digits.decode("ascii"))

    def _read_dict(self) -> dict:
        self.pos += 2
        out: dict = {}
        while True:
            self.skip_ws()
            if self.data[self.pos : self.pos + 2] == b">>":
                self.pos += 2
                return out
            key = self.read_object()
            if not isinstance(key, str):
                raise MalformedPdfError("dictionary key is not a name")
            out[key] = self.read_object()

    def _read_array(self) -> list:
        self.pos += 1
        out = []
        while True:
            self.skip_ws()
            if self.pos >= len(self.data):
                raise MalformedPdfError("unterminated array")
            if self.data[self.pos] == 0x5D:
                self.pos += 1
                return out
            out.append(self.read_object())

    def _read_number_or_ref(self):
        first = self._read_number()
        if isinstance(first, int) and first >= 0:
            save = self.pos
            self.skip_ws()
            if self.pos < len(self.data) and self.data[self.pos] in b"0123456789":
                try:
                    second = self._read_number()
                    self.skip_ws()
                    if (
                        isinstance(second, int)
                        and self.data[self.pos : self.pos + 1] == b"R"
                        and (
                            self.pos + 1 >= len(self.data)
                            or self.data[self.pos + 1] in _WHITESPACE + _DELIMITERS
                        )
                    ):
                        self.pos += 1
                        return _Ref(first, second)
                except MalformedPdfError:
                    pass
            self.pos = save
        return first

    def _read_number(self):
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos] in b"+-.0123456789eE":
            self.pos += 1
        token = data[start : self.pos]
        try:
            if b"." in token or b"e" in token.lower():
                return float(token)
            return int(token)
        except ValueError as exc:
            raise MalformedPdfError(f"bad number token {token!r}") from exc

    def _read_keyword(self) -> object:
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos] not in _WHITESPACE + _DELIMITERS:
            self.pos += 1
        word = data[start : self.pos]
        if not word:
            # lone delimiter with no meaning here; skip it to stay robust
            self.pos += 1
            return _Keyword(chr(data[start]))
        if word == b"true":
            return True
        if word == b"false":
            return False
        if word == b"null":
            return None
        return _Keyword(word.decode("latin-1"))


class _Document:
    """Indexed view of a PDF body built by scanning for indirect objects.

    Scanning instead of trusting the xref table tolerates files with stale or
    truncated tables; later definitions of the same object number win, which
    matches incremental-update semantics.
    """

    def __init__(self, data: bytes):
        self.data = data
        self.offsets: dict[int, int] = {}
        self._cache: dict[int, object] = {}
        self.warnings: list[str] = []
        self._scan_objects()
        self.trailer = self._collect_trailer()
        self._expand_object_streams()

    def _scan_objects(self) -> None:
        skip_until = 0
        for match in re.finditer(rb"(?:^|[\r\n\x00\t\x0c ])(\d{1,9})\s+(\d{1,5})\s+obj\b", self.data):
            if match.start() < skip_until:
                continue  # inside the previous object's stream payload
            num = int(match.group(1))
            body_start = match.end()
            self.offsets[num] = body_start
            end = self.data.find(b"endobj", body_start)
            stream_at = self.data.find(b"stream", body_start)
            if 0 <= stream_at < (end if end >= 0 else len(self.data)):
                stream_end = self.data.find(b"endstream", stream_at)
                if stream_end >= 0:
                    end = self.data.find(b"endobj", stream_end)
            skip_until = end if end >= 0 else len(self.data)

    def _parse_at(self, pos: int):
        lexer = _Lexer(self.data, pos)
        value = lexer.read_object()
        lexer.skip_ws()
        if self.data[lexer.pos : lexer.pos + 6] == b"stream":
            return self._parse_stream(value, lexer.pos + 6)
        return value

    def _parse_stream(self, meta: dict, after_keyword: int) -> _Stream:
        pos = after_keyword
        if self.data[pos : pos + 2] == b"\r\n":
            pos += 2
        elif self.data[pos : pos + 1] in (b"\n", b"\r"):
            pos += 1
        length = self.resolve(meta.get("Length"))
        end = None
        if isinstance(length, int) and 0 <= length <= len(self.data) - pos:
            end = pos + length
            if b"endstream" not in self.data[end : end + 32]:
                end = None  # declared length is wrong; fall back to searching
        if end is None:
            end = self.data.find(b"endstream", pos)
            if end < 0:
                raise MalformedPdfError("stream without endstream")
            while end > pos and self.data[end - 1] in b"\r\n":
                end -= 1
        return _Stream(meta, self.data[pos:end])

    def get(self, num: int):
        if num not in self._cache:
            offset = self.offsets.get(num)
            if offset is None:
                return None
            try:
                self._cache[num] = self._parse_at(offset)
            except MalformedPdfError as exc:
                self.warnings.append(f"object {num}: {exc}")
                self._cache[num] = None
        return self._cache[num]

    def resolve(self, value, depth: int = 0):
        while isinstance(value, _Ref):
            if depth > 32:
                raise MalformedPdfError("reference cycle")
            value = self.get(value.num)
            depth += 1
        return value

    def _collect_trailer(self) -> dict:
        merged: dict = {}
        for match in re.finditer(rb"trailer\b", self.data):
            try:
                merged.update(_Lexer(self.data, match.end()).read_object())
            except MalformedPdfError:
                continue
        if "Root" not in merged or "Encrypt" not in merged:
            # cross-reference streams carry the trailer dictionary instead
            for num in self.offsets:
                obj = self.get(num)
                if isinstance(obj, _Stream) and obj.meta.get("Type") == "XRef":
                    for key, value in obj.meta.items():
                        merged.setdefault(key, value)
        return merged

    def _expand_object_streams(self) -> None:
        for num in list(self.offsets):
            obj = self.get(num)
            if not (isinstance(obj, _Stream) and obj.meta.get("Type") == "ObjStm"):
                continue
            try:
                payload = decode_stream(obj, self)
            except _UnsupportedFilter as exc:
                self.warnings.append(f"object stream {num}: {exc}")
                continue
            count = self.resolve(obj.meta.get("N"))
            first = self.resolve(obj.meta.get("First"))
            if not isinstance(count, int) or not isinstance(first, int):
                continue
            header = _Lexer(payload[:first])
            try:
                for _ in range(count):
                    child = header.read_object()
                    offset = header.read_object()
                    if isinstance(child, int) and isinstance(offset, int):
                        value = _Lexer(payload, first + offset).read_object()
                        self._cache.setdefault(child, value)
                        self.offsets.setdefault(child, -1)
            except MalformedPdfError as exc:
                self.warnings.append(f"object stream {num}: {exc}")


def _ascii85_decode(raw: bytes) -> bytes:
    body = re.sub(rb"\s+", b"", raw)
    if body.startswith(b"<~"):
        body = body[2:]
    if body.endswith(b"~>"):
        body = body[:-2]
    return base64.a85decode(body)


def _flate_decode(raw: bytes) -> bytes:
    try:
        return zlib.decompress(raw)
    except zlib.error:
        # tolerate trailing garbage after the deflate payload
        decomp = zlib.decompressobj()
        out = decomp.decompress(raw)
        if not out:
            raise
        return out


def decode_stream(stream: _Stream, doc: _Document) -> bytes:
    filters = doc.resolve(stream.meta.get("Filter"))
    if filters is None:
        return stream.raw
    if not isinstance(filters, list):
        filters = [filters]
    parms = doc.resolve(stream.meta.get("DecodeParms"))
    if not isinstance(parms, list):
        parms = [parms] * len(filters)
    data = stream.raw
    for name, parm in zip(filters, parms):
        name = doc.resolve(name)
        parm = doc.resolve(parm) or {}
        if name == "FlateDecode":
            data = _flate_decode(data)
            predictor = doc.resolve(parm.get("Predictor", 1))
            if isinstance(predictor, int) and predictor > 1:
                raise _UnsupportedFilter(f"FlateDecode predictor {predictor}")
        elif name in ("ASCII85Decode", "A85"):
            data = _ascii85_decode(data)
        elif name in ("ASCIIHexDecode", "AHx"):
            digits = re.sub(rb"[^0-9a-fA-F]", b"", data.split(b">")[0])
            if len(digits) % 2:
                digits += b"0"
            data = bytes.fromhex(digits.decode("ascii"))
        else:
            raise _UnsupportedFilter(str(name))
    return data


def _decode_text(raw: bytes) -> str:
    if raw.startswith(b"\xfe\xff"):
        try:
            return raw[2:].decode("utf-16-be")
        except UnicodeDecodeError:
            pass
    return "".join(_WINANSI_FIXUPS.get(b, chr(b)) for b in raw)


def _matmul(m1, m2):
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
        e1 * a2 + f1 * c2 + e2,
        e1 * b2 + f1 * d2 + f2,
    )


_IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


@dataclass
class _Run:
    x: float
    y: float
    width: float
    seq: int
    text: str


def _interpret_content(content: bytes) -> list[_Run]:
    """Execute the text-positioning subset of a content stream."""
    lexer = _Lexer(content)
    stack: list = []
    runs: list[_Run] = []
    ctm = _IDENTITY
    ctm_stack: list[tuple] = []
    tm = tlm = _IDENTITY
    leading = 0.0
    font_size = 12.0
    seq = 0

    def num(value, default=0.0) -> float:
        return float(value) if isinstance(value, (int, float)) else default

    def show(raw) -> None:
        nonlocal tm, seq
        if not isinstance(raw, bytes):
            return
        text = _decode_text(raw)
        if not text:
            return
        device = _matmul(tm, ctm)
        # crude advance (half an em per glyph) so later runs on the same
        # baseline sort after this one and x gaps stay measurable
        advance = 0.5 * font_size * len(text)
        tm = _matmul((1, 0, 0, 1, advance, 0), tm)
        end_x = _matmul(tm, ctm)[4]
        runs.append(_Run(x=device[4], y=device[5], width=end_x - device[4], seq=seq, text=text))
        seq += 1

    def newline() -> None:
        nonlocal tm, tlm
        tlm = _matmul((1, 0, 0, 1, 0, -leading), tlm)
        tm = tlm

    while True:
        try:
            if lexer.at_end():
                break
            token = lexer.read_object()
        except MalformedPdfError:
            break
        if not isinstance(token, _Keyword):
            stack.append(token)
            continue
        op = token.name
        if op == "BT":
            tm = tlm = _IDENTITY
        elif op == "Tf" and len(stack) >= 2:
            font_size = num(stack[-1], 12.0)
        elif op == "TL" and stack:
            leading = num(stack[-1])
        elif op == "Td" and len(stack) >= 2:
            tlm = _matmul((1, 0, 0, 1, num(stack[-2]), num(stack[-1])), tlm)
            tm = tlm
        elif op == "TD" and len(stack) >= 2:
            leading = -num(stack[-1])
            tlm = _matmul((1, 0, 0, 1, num(stack[-2]), num(stack[-1])), tlm)
            tm = tlm
        elif op == "Tm" and len(stack) >= 6:
            tm = tlm = tuple(num(v) for v in stack[-6:])
        elif op == "T*":
            newline()
        elif op == "Tj" and stack:
            show(stack[-1])
        elif op == "'" and stack:
            newline()
            show(stack[-1])
        elif op == '"' and len(stack) >= 3:
            newline()
            show(stack[-1])
        elif op == "TJ" and stack and isinstance(stack[-1], list):
            for element in stack[-1]:
                if isinstance(element, bytes):
                    show(element)
                elif isinstance(element, (int, float)) and element <= _WORD_GAP_ADJUSTMENT:
                    if runs and not runs[-1].text.endswith(" "):
                        runs[-1].text += " "
        elif op == "cm" and len(stack) >= 6:
            ctm = _matmul(tuple(num(v) for v in stack[-6:]), ctm)
        elif op == "q":
            ctm_stack.append(ctm)
        elif op == "Q" and ctm_stack:
            ctm = ctm_stack.pop()
        if op not in ("q", "Q"):
            stack.clear()
    return runs


@dataclass
class _Line:
    y: float
    x: float
    end_x: float
    text: str


def _runs_to_segments(runs: list[_Run]) -> list[_Line]:
    """Merge baseline-adjacent runs, breaking at x gaps wide enough to be columns."""
    segments: list[_Line] = []
    for run in sorted(runs, key=lambda r: (-r.y, r.x, r.seq)):
        if (
            segments
            and abs(segments[-1].y - run.y) <= _LINE_Y_TOLERANCE
            and run.x - segments[-1].end_x < _COLUMN_GAP_MIN
        ):
            seg = segments[-1]
            seamless = (
                seg.text.endswith(" ")
                or not seg.text
                or run.x - seg.end_x <= _SEAMLESS_GAP_MAX
            )
            seg.text += run.text if seamless else " " + run.text
            seg.end_x = max(seg.end_x, run.x + run.width)
        else:
            segments.append(_Line(y=run.y, x=run.x, end_x=run.x + run.width, text=run.text))
    return [seg for seg in segments if seg.text.strip()]


def _split_columns(segments: list[_Line]) -> list[list[_Line]]:
    """Detect a two-column layout from the gap structure of segment start positions."""
    if len(segments) < 2 * _COLUMN_MIN_LINES:
        return [segments]
    xs = sorted({round(seg.x, 1) for seg in segments})
    if len(xs) < 2:
        return [segments]
    gaps = [(xs[i + 1] - xs[i], (xs[i] + xs[i + 1]) / 2) for i in range(len(xs) - 1)]
    gap, boundary = max(gaps)
    if gap < _COLUMN_GAP_MIN:
        return [segments]
    left = [seg for seg in segments if seg.x < boundary]
    right = [seg for seg in segments if seg.x >= boundary]
    if len(left) < _COLUMN_MIN_LINES or len(right) < _COLUMN_MIN_LINES:
        return [segments]
    return [left, right]


def _merge_column_lines(segments: list[_Line]) -> list[_Line]:
    lines: list[_Line] = []
    for seg in sorted(segments, key=lambda s: (-s.y, s.x)):
        if lines and abs(lines[-1].y - seg.y) <= _LINE_Y_TOLERANCE:
            lines[-1].text += " " + seg.text
            lines[-1].end_x = max(lines[-1].end_x, seg.end_x)
        else:
            lines.append(seg)
    return lines


def _join_lines(lines: list[_Line]) -> str:
    out: list[str] = []
    for line in lines:
        text = line.text.strip()
        if out and out[-1].endswith("-") and text[:1].islower():
            out[-1] = out[-1][:-1] + text
        else:
            out.append(text)
    return "\n".join(out)


def _page_contents(doc: _Document, page: dict) -> bytes:
    contents = doc.resolve(page.get("Contents"))
    parts: list[bytes] = []
    items = contents if isinstance(contents, list) else [contents]
    for item in items:
        item = doc.resolve(item)
        if isinstance(item, _Stream):
            try:
                parts.append(decode_stream(item, doc))
            except (_UnsupportedFilter, zlib.error, ValueError) as exc:
                doc.warnings.append(f"content stream skipped: {exc}")
    return b"\n".join(parts)


def _collect_pages(doc: _Document) -> list[dict]:
    pages: list[dict] = []
    root = doc.resolve(doc.trailer.get("Root"))
    node = doc.resolve(root.get("Pages")) if isinstance(root, dict) else None

    def walk(node: dict, depth: int = 0) -> None:
        if depth > 64 or not isinstance(node, dict):
            return
        if node.get("Type") == "Page":
            pages.append(node)
            return
        for kid in doc.resolve(node.get("Kids")) or []:
            kid = doc.resolve(kid)
            if isinstance(kid, dict):
                walk(kid, depth + 1)

    if isinstance(node, dict):
        walk(node)
    if not pages:
        # fall back to object-number order when the page tree is unusable
        for num in sorted(doc.offsets):
            obj = doc.get(num)
            if isinstance(obj, dict) and obj.get("Type") == "Page":
                pages.append(obj)
    return pages


def extract_pdf_text(source: Path | str | bytes) -> ExtractedText:
    """Extract the running text of a PDF in reading order.

    Raises MalformedPdfError when the file is not recognizably a PDF and
    EncryptedDocumentError when the document declares an /Encrypt dictionary.
    """
    data = source if isinstance(source, bytes) else Path(source).read_bytes()
    if b"%PDF-" not in data[:1024]:
        raise MalformedPdfError("missing PDF header")
    doc = _Document(data)
    if doc.trailer.get("Encrypt") is not None:
        raise EncryptedDocumentError("document has an encryption dictionary")
    pages = _collect_pages(doc)
    if not pages:
        raise MalformedPdfError("no pages found")
    page_texts: list[str] = []
    for page in pages:
        runs = _interpret_content(_page_contents(doc, page))
        segments = _runs_to_segments(runs)
        columns = _split_columns(segments)
        page_texts.append(
            "\n".join(_join_lines(_merge_column_lines(col)) for col in columns if col)
        )
    text = "\n\n".join(t for t in page_texts if t)
    return ExtractedText(text=text, n_pages=len(pages), warnings=tuple(doc.warnings))
