"""Format separation: split a document into plain-text, formula and table
segments.

Recognition runs in precedence passes over the not-yet-claimed parts of
the source, so higher-priority constructs can never be shredded by
lower-priority delimiters: fenced code (shielded as plain text), then
HTML tables, then Markdown pipe tables, then display math, then inline
math. Whatever remains is plain text. Unclosed delimiters degrade to
plain text; the function is total over arbitrary input.

Spans are half-open byte ranges into the UTF-8 encoding of the source
and partition it exactly. Formula spans include their delimiters while
the segment content has them stripped; table content is the raw markup.
"""

from __future__ import annotations

import re

from .records import Segment, SegmentKind, SegmentedDoc

_FENCE = "```"
_TABLE_OPEN = re.compile(r"<table\b", re.IGNORECASE)
_TABLE_ANY = re.compile(r"<(/?)table\b", re.IGNORECASE)
_TABLE_CLOSE_END = re.compile(r">")
_PIPE_SEPARATOR = re.compile(r"^[ \t]*\|[-: |]+\|[ \t\r]*$")

# (opener, closer, content-includes-markers)
_DISPLAY_DELIMS = (
    ("$$", "$$", False),
    ("\\[", "\\]", False),
    ("\\begin{equation}", "\\end{equation}", True),
    ("\\begin{align*}", "\\end{align*}", True),
    ("\\begin{align}", "\\end{align}", True),
)

_PLAIN = SegmentKind.PLAIN_TEXT
_FORMULA = SegmentKind.FORMULA
_TABLE = SegmentKind.TABLE


def _is_escaped(text: str, pos: int) -> bool:
    """True when the character at pos sits behind an odd number of
    backslashes."""
    count = 0
    i = pos - 1
    while i >= 0 and text[i] == "\\":
        count += 1
        i -= 1
    return count % 2 == 1


class _Claim:
    __slots__ = ("start", "end", "kind", "content")

    def __init__(self, start: int, end: int, kind: SegmentKind, content: str):
        self.start = start
        self.end = end
        self.kind = kind
        self.content = content


def _gaps(claims: list[_Claim], length: int) -> list[tuple[int, int]]:
    out = []
    cursor = 0
    for claim in sorted(claims, key=lambda c: c.start):
        if cursor < claim.start:
            out.append((cursor, claim.start))
        cursor = claim.end
    if cursor < length:
        out.append((cursor, length))
    return out


def _claim_code_fences(doc: str, lo: int, hi: int, claims: list[_Claim]) -> None:
    i = lo
    while True:
        start = doc.find(_FENCE, i, hi)
        if start < 0:
            return
        close = doc.find(_FENCE, start + 3, hi)
        if close < 0:
            return  # unclosed fence: ordinary text
        end = close + 3
        claims.append(_Claim(start, end, _PLAIN, doc[start:end]))
        i = end


def _claim_html_tables(doc: str, lo: int, hi: int, claims: list[_Claim]) -> None:
    i = lo
    while i < hi:
        open_match = _TABLE_OPEN.search(doc, i, hi)
        if open_match is None:
            return
        start = open_match.start()
        depth = 0
        scan = start
        close_end = -1
        while scan < hi:
            tag = _TABLE_ANY.search(doc, scan, hi)
            if tag is None:
                break
            if tag.group(1):  # closing tag
                depth -= 1
                if depth == 0:
                    gt = _TABLE_CLOSE_END.search(doc, tag.end(), hi)
                    close_end = gt.end() if gt else hi
                    break
            else:
                depth += 1
            scan = tag.end()
        if close_end < 0:
            i = open_match.end()  # unclosed: leave as text, keep looking
            continue
        claims.append(_Claim(start, close_end, _TABLE, doc[start:close_end]))
        i = close_end


def _line_bounds(doc: str, lo: int, hi: int) -> list[tuple[int, int]]:
    """(start, end) per line within [lo, hi), end excluding the newline."""
    bounds = []
    pos = lo
    while pos < hi:
        nl = doc.find("\n", pos, hi)
        if nl < 0:
            bounds.append((pos, hi))
            break
        bounds.append((pos, nl))
        pos = nl + 1
    return bounds


def _claim_pipe_tables(doc: str, lo: int, hi: int, claims: list[_Claim]) -> None:
    lines = _line_bounds(doc, lo, hi)
    n = len(lines)
    idx = 0
    while idx < n:
        start, end = lines[idx]
        line = doc[start:end]
        at_line_start = start == 0 or doc[start - 1] == "\n"
        if not (at_line_start and line.lstrip(" \t").startswith("|")):
            idx += 1
            continue
        run_end = idx
        while run_end + 1 < n:
            nxt_start, nxt_end = lines[run_end + 1]
            if doc[nxt_start:nxt_end].lstrip(" \t").startswith("|"):
                run_end += 1
            else:
                break
        if run_end > idx and _PIPE_SEPARATOR.match(
            doc[lines[idx + 1][0] : lines[idx + 1][1]]
        ):
            span_start = lines[idx][0]
            span_end = lines[run_end][1]
            claims.append(
                _Claim(span_start, span_end, _TABLE, doc[span_start:span_end])
            )
        idx = run_end + 1


def _find_unescaped(doc: str, needle: str, lo: int, hi: int) -> int:
    pos = lo
    while True:
        found = doc.find(needle, pos, hi)
        if found < 0:
            return -1
        if needle[0] in ("\\", "$") and _is_escaped(doc, found):
            pos = found + 1
            continue
        return found


def _claim_display_math(doc: str, lo: int, hi: int, claims: list[_Claim]) -> None:
    i = lo
    while i < hi:
        best: tuple[int, str, str, bool] | None = None
        for opener, closer, keep in _DISPLAY_DELIMS:
            at = _find_unescaped(doc, opener, i, hi)
            if at >= 0 and (best is None or at < best[0]):
                best = (at, opener, closer, keep)
        if best is None:
            return
        start, opener, closer, keep = best
        close = _find_unescaped(doc, closer, start + len(opener), hi)
        if close < 0:
            i = start + len(opener)  # unclosed: delimiter stays text
            continue
        end = close + len(closer)
        content = doc[start:end] if keep else doc[start + len(opener) : close]
        claims.append(_Claim(start, end, _FORMULA, content))
        i = end


def _claim_inline_math(doc: str, lo: int, hi: int, claims: list[_Claim]) -> None:
    i = lo
    while i < hi:
        ch = doc[i]
        if ch == "\\" and doc.startswith("\\(", i) and not _is_escaped(doc, i):
            close = _find_unescaped(doc, "\\)", i + 2, hi)
            if close >= 0 and close > i + 2:
                claims.append(
                    _Claim(i, close + 2, _FORMULA, doc[i + 2 : close])
                )
                i = close + 2
                continue
            i += 2
            continue
        if ch == "$" and not _is_escaped(doc, i):
            close = _find_unescaped(doc, "$", i + 1, hi)
            if close < 0:
                i += 1  # unpaired: stays text, but \(...\) may still follow
                continue
            interior = doc[i + 1 : close]
            if interior and "\n" not in interior:
                claims.append(_Claim(i, close + 1, _FORMULA, interior))
                i = close + 1
            else:
                i = close  # the closer may itself open a formula
            continue
        i += 1


def _byte_offsets(doc: str) -> list[int] | None:
    if doc.isascii():
        return None
    offsets = [0] * (len(doc) + 1)
    total = 0
    for i, ch in enumerate(doc):
        cp = ord(ch)
        total += 1 if cp < 0x80 else 2 if cp < 0x800 else 3 if cp < 0x10000 else 4
        offsets[i + 1] = total
    return offsets


def segment(doc: str) -> SegmentedDoc:
    """Split a document into plain-text, formula and table segments whose
    byte spans partition the source."""
    n = len(doc)
    claims: list[_Claim] = []

    if _FENCE in doc:
        for lo, hi in _gaps(claims, n):
            _claim_code_fences(doc, lo, hi, claims)
    if "<" in doc:
        for lo, hi in _gaps(claims, n):
            _claim_html_tables(doc, lo, hi, claims)
    if "|" in doc:
        for lo, hi in _gaps(claims, n):
            _claim_pipe_tables(doc, lo, hi, claims)
    if "$" in doc or "\\" in doc:
        for lo, hi in _gaps(claims, n):
            _claim_display_math(doc, lo, hi, claims)
        for lo, hi in _gaps(claims, n):
            _claim_inline_math(doc, lo, hi, claims)

    claims.sort(key=lambda c: c.start)
    # Gaps and shielded code fences merge into plain-text segments.
    pieces: list[tuple[int, int, SegmentKind, str]] = []
    cursor = 0
    for claim in claims:
        if cursor < claim.start:
            pieces.append((cursor, claim.start, _PLAIN, doc[cursor : claim.start]))
        pieces.append((claim.start, claim.end, claim.kind, claim.content))
        cursor = claim.end
    if cursor < n:
        pieces.append((cursor, n, _PLAIN, doc[cursor:n]))

    merged: list[tuple[int, int, SegmentKind, str]] = []
    for piece in pieces:
        if merged and piece[2] is _PLAIN and merged[-1][2] is _PLAIN:
            prev = merged[-1]
            merged[-1] = (prev[0], piece[1], _PLAIN, doc[prev[0] : piece[1]])
        else:
            merged.append(piece)

    offsets = _byte_offsets(doc)
    segments = []
    for start, end, kind, content in merged:
        if offsets is None:
            span = (start, end)
        else:
            span = (offsets[start], offsets[end])
        segments.append(Segment(kind=kind, content=content, span=span))
    return SegmentedDoc(source=doc, segments=tuple(segments))


def _nonws_bytes(text: str) -> int:
    return len("".join(text.split()).encode("utf-8"))


def type_profile(doc: str) -> dict:
    """Presence flags plus the share of non-whitespace bytes that sit in
    formula or table content (delimiters count in neither side)."""
    segmented = segment(doc)
    has_formula = False
    has_table = False
    formatted = 0
    total = 0
    for seg in segmented.segments:
        size = _nonws_bytes(seg.content)
        total += size
        if seg.kind is _FORMULA:
            has_formula = True
            formatted += size
        elif seg.kind is _TABLE:
            has_table = True
            formatted += size
    ratio = formatted / total if total else 0.0
    return {
        "has_formula": has_formula,
        "has_table": has_table,
        "formatted_ratio": ratio,
    }
