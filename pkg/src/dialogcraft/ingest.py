"""Parse HTML pages into hierarchical content elements and index grounding spans.

The markup subset that participates in structure is h1-h6, p, ul/ol/li and
title; every other tag is transparent (its text flows into the enclosing
structural element).  Document text is the whitespace-normalized text of the
structural blocks joined by newlines, so every span's character range falls
inside exactly one block and can be anchored back into the markup.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from html.parser import HTMLParser
from typing import Optional

from .models import (
    TAG_CLAUSE,
    TAG_LIST_ITEM,
    TAG_SENTENCE,
    TAG_TITLE,
    DataError,
    Document,
    Paragraph,
    Section,
    Span,
)

HEADER_TAGS = {"h1", "h2", "h3", "h4", "h5", "h6"}
SUPPRESSED_TAGS = {"script", "style", "noscript", "template"}

# Connectives that open a clause boundary, longest alternatives first.
CONNECTIVES = [
    "provided that",
    "as long as",
    "in case",
    "so that",
    "whenever",
    "otherwise",
    "however",
    "because",
    "unless",
    "until",
    "when",
    "but",
    "or",
    "if",
]
_CONNECTIVE_RE = re.compile(
    r"\b(" + "|".join(re.escape(c) for c in CONNECTIVES) + r")\b", re.IGNORECASE
)

_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "no", "vs",
    "e.g", "i.e", "etc", "u.s", "u.k", "dept", "inc", "approx", "est",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
}

_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")


def _normalize_ws(s: str) -> str:
    return " ".join(s.split())


@dataclass
class Block:
    """One structural text block: a header, title, prose paragraph or list item."""

    kind: str  # "title" | "prose" | "list_item"
    anchor_tag: str  # source element tag (h1-h6, p, li)
    occ: int  # occurrence index among blocks with the same anchor_tag
    level: int  # header depth for title blocks from hN, else 0
    start: int = -1  # filled once text offsets are assigned
    end: int = -1
    text: str = ""


class _BlockParser(HTMLParser):
    """Streams structural blocks out of markup, tolerating unbalanced tags."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.blocks: list[tuple[str, str, int, str]] = []  # kind, tag, level, raw text
        self.warnings: list[str] = []
        self.head_title: Optional[str] = None
        self._stack: list[str] = []  # open structural/suppressed tags
        self._buf: list[str] = []
        self._buf_tag: Optional[str] = None
        self._buf_kind: Optional[str] = None
        self._buf_level = 0
        self._in_title = False
        self._title_buf: list[str] = []
        self._suppress = 0

    def _flush(self) -> None:
        if self._buf_tag is not None:
            text = _normalize_ws("".join(self._buf))
            if text:
                self.blocks.append((self._buf_kind or "prose", self._buf_tag, self._buf_level, text))
            self._buf = []
            self._buf_tag = None
            self._buf_kind = None
            self._buf_level = 0

    def _open_block(self, tag: str, kind: str, level: int = 0) -> None:
        self._flush()
        self._buf_tag = tag
        self._buf_kind = kind
        self._buf_level = level

    def handle_starttag(self, tag, attrs):
        if tag in SUPPRESSED_TAGS:
            self._suppress += 1
            self._stack.append(tag)
            return
        if tag == "title":
            self._in_title = True
            self._stack.append(tag)
            return
        if tag in HEADER_TAGS:
            self._open_block(tag, "title", level=int(tag[1]))
            self._stack.append(tag)
        elif tag in ("p", "li"):
            # p and li close implicitly when a sibling opens
            if self._stack and self._stack[-1] == tag:
                self._stack.pop()
            self._open_block(tag, "list_item" if tag == "li" else "prose")
            self._stack.append(tag)
        elif tag in ("ul", "ol"):
            # a list opening inside a paragraph/item finalizes that block
            self._flush()
            self._stack.append(tag)
        # all other tags are transparent

    def _pop(self, tag: str) -> None:
        for i in range(len(self._stack) - 1, -1, -1):
            if self._stack[i] == tag:
                del self._stack[i]
                return

    def handle_endtag(self, tag):
        if tag in SUPPRESSED_TAGS:
            if self._suppress:
                self._suppress -= 1
            self._pop(tag)
            return
        if tag == "title":
            self._in_title = False
            if self.head_title is None:
                self.head_title = _normalize_ws("".join(self._title_buf))
            self._pop(tag)
            return
        if tag in HEADER_TAGS or tag in ("p", "li", "ul", "ol"):
            if tag not in self._stack:
                self.warnings.append(f"unmatched closing tag </{tag}>")
                return
            self._flush()
            if tag in ("ul", "ol") and self._stack and self._stack[-1] == "li":
                self._pop("li")  # dangling item closed by its list
            self._pop(tag)

    def handle_data(self, data):
        if self._suppress:
            return
        if self._in_title:
            self._title_buf.append(data)
            return
        if self._buf_tag is None and data.strip():
            # tail text of a p/li whose buffer a nested list closed: reopen a
            # continuation block for the innermost open content element
            for tag in reversed(self._stack):
                if tag in ("p", "li"):
                    self._buf_tag = tag
                    self._buf_kind = "list_item" if tag == "li" else "prose"
                    break
        if self._buf_tag is not None:
            self._buf.append(data)
        # bare text outside any structural element is dropped

    def close(self):
        super().close()
        self._flush()
        leftovers = [t for t in self._stack if t not in SUPPRESSED_TAGS and t != "title"]
        for tag in leftovers:
            self.warnings.append(f"unclosed tag <{tag}>")


def _extract_blocks(html: str) -> tuple[str, list[Block], list[str], str]:
    """Return (text, blocks, warnings, head_title) for a page."""
    parser = _BlockParser()
    parser.feed(html)
    parser.close()

    raw = parser.blocks
    if not any(text for _, _, _, text in raw):
        raise DataError("no content")

    blocks: list[Block] = []
    occs: dict[str, int] = {}
    for kind, tag, level, text in raw:
        occ = occs.get(tag, 0)
        occs[tag] = occ + 1
        blocks.append(Block(kind=kind, anchor_tag=tag, occ=occ, level=level, text=text))

    pos = 0
    for b in blocks:
        b.start = pos
        b.end = pos + len(b.text)
        pos = b.end + 1  # newline separator
    text = "\n".join(b.text for b in blocks)
    return text, blocks, parser.warnings, parser.head_title or ""


def parse_document(raw_html: str, meta: dict) -> Document:
    """Parse markup into a Document with sections and paragraphs (spans empty).

    meta must carry doc_id, domain, title and url.  Content before the first
    header (or a page with no headers) lands in an implicit level-1 root
    section that has no title span.  Deterministic for identical input;
    unbalanced markup is recovered best-effort with notes in
    Document.warnings.
    """
    doc_id = meta["doc_id"]
    text, blocks, warnings, head_title = _extract_blocks(raw_html)

    sections: list[Section] = []
    paragraphs: list[Paragraph] = []
    # stack of (level, section index) for the currently open header chain
    stack: list[tuple[int, int]] = []

    if blocks and blocks[0].kind != "title":
        sections.append(
            Section(sec_id=f"{doc_id}-sec0", title_span="", level=1, parent_sec=None,
                    start=0, end=len(text))
        )
        stack.append((1, 0))

    for b in blocks:
        if b.kind == "title":
            while stack and stack[-1][0] >= b.level:
                stack.pop()
            parent = sections[stack[-1][1]].sec_id if stack else None
            sec = Section(
                sec_id=f"{doc_id}-sec{len(sections)}",
                title_span="",  # filled by segment_spans
                level=b.level,
                parent_sec=parent,
                start=b.start,
                end=len(text),  # provisional; trimmed below
            )
            stack.append((b.level, len(sections)))
            sections.append(sec)
        else:
            parent = sections[stack[-1][1]].sec_id
            paragraphs.append(
                Paragraph(
                    p_id=f"{doc_id}-p{len(paragraphs)}",
                    kind=b.kind,
                    parent_sec=parent,
                    start=b.start,
                    end=b.end,
                )
            )

    # close section ranges at the next header of the same or shallower level
    for i, sec in enumerate(sections):
        for later in sections[i + 1:]:
            if later.level <= sec.level:
                sec.end = later.start - 1 if later.start > 0 else 0
                break

    return Document(
        doc_id=doc_id,
        domain=meta.get("domain", ""),
        title=meta.get("title") or head_title,
        url=meta.get("url", ""),
        text=text,
        html=raw_html,
        sections=sections,
        paragraphs=paragraphs,
        spans=[],
        warnings=warnings,
    )


def _sentence_ranges(text: str, start: int, end: int) -> list[tuple[int, int]]:
    """Split text[start:end] into sentence ranges on terminal punctuation."""
    ranges = []
    seg_start = start
    for m in _SENTENCE_END_RE.finditer(text, start, end):
        boundary = m.end()
        token = text[max(start, text.rfind(" ", start, m.start()) + 1):m.start()]
        if token.lower().rstrip(".") in _ABBREVIATIONS or re.fullmatch(r"[A-Za-z]", token):
            continue
        nxt = boundary
        while nxt < end and text[nxt] == " ":
            nxt += 1
        if nxt >= end:
            break
        ranges.append((seg_start, boundary))
        seg_start = nxt
    if seg_start < end:
        ranges.append((seg_start, end))
    return ranges


def connective_matches(sentence: str) -> list[tuple[int, str]]:
    """All (offset, connective) matches inside one sentence, in order."""
    return [(m.start(), m.group(1).lower()) for m in _CONNECTIVE_RE.finditer(sentence)]


def _clause_ranges(text: str, start: int, end: int) -> list[tuple[int, int]]:
    """Split one sentence into clause ranges at connective boundaries.

    A mid-sentence connective opens a boundary right before itself; a
    sentence-initial connective closes its clause at the first comma.  A
    boundary is dropped when it would strand a clause of fewer than two
    tokens.
    """
    sent = text[start:end]
    points: list[int] = []
    for off, _conn in connective_matches(sent):
        if off == 0:
            comma = sent.find(",")
            if 0 < comma < len(sent) - 1:
                points.append(start + comma + 1)
        else:
            points.append(start + off)

    bounds = [start]
    for p in sorted(set(points)):
        prev_seg = text[bounds[-1]:p]
        rest = text[p:end]
        if len(prev_seg.split()) >= 2 and rest.strip():
            bounds.append(p)
    bounds.append(end)

    ranges = []
    for lo, hi in zip(bounds, bounds[1:]):
        while lo < hi and text[lo] == " ":
            lo += 1
        while hi > lo and text[hi - 1] == " ":
            hi -= 1
        if lo < hi:
            ranges.append((lo, hi))
    return ranges


def segment_spans(doc: Document) -> Document:
    """Populate grounding spans: titles, sentences, clauses, list items.

    Returns a new Document; the input must not have spans yet.
    """
    if doc.spans:
        raise DataError(f"{doc.doc_id}: spans already populated")
    _, blocks, _, _ = _extract_blocks(doc.html)

    para_by_start = {p.start: p for p in doc.paragraphs}
    sec_by_start = {s.start: s for s in doc.sections}

    spans: list[Span] = []
    sentence_id = 0
    for b in blocks:
        if b.start >= b.end:
            continue
        anchor = f"{b.anchor_tag}[{b.occ}]"
        if b.kind == "title":
            sec = sec_by_start[b.start]
            spans.append(
                Span(
                    id_sp="",
                    start=b.start,
                    end=b.end,
                    tag=TAG_TITLE,
                    parent_p=sec.sec_id,
                    sentence_id=sentence_id,
                    html_anchor=f"{anchor}@0:{b.end - b.start}",
                )
            )
            sentence_id += 1
            continue

        para = para_by_start[b.start]
        whole_tag = TAG_LIST_ITEM if b.kind == "list_item" else TAG_SENTENCE
        for s_lo, s_hi in _sentence_ranges(doc.text, b.start, b.end):
            clause_ranges = _clause_ranges(doc.text, s_lo, s_hi)
            tag = TAG_CLAUSE if len(clause_ranges) > 1 else whole_tag
            for c_lo, c_hi in clause_ranges:
                spans.append(
                    Span(
                        id_sp="",
                        start=c_lo,
                        end=c_hi,
                        tag=tag,
                        parent_p=para.p_id,
                        sentence_id=sentence_id,
                        html_anchor=f"{anchor}@{c_lo - b.start}:{c_hi - b.start}",
                    )
                )
            sentence_id += 1

    spans.sort(key=lambda s: s.start)
    for i, sp in enumerate(spans):
        sp.id_sp = f"{doc.doc_id}-sp{i}"

    sections = [replace(sec) for sec in doc.sections]
    sec_span = {sp.parent_p: sp.id_sp for sp in spans if sp.tag == TAG_TITLE}
    for sec in sections:
        sec.title_span = sec_span.get(sec.sec_id, "")

    return replace(doc, sections=sections, spans=spans)


def resolve_anchor(doc: Document, anchor: str) -> str:
    """Resolve a span's html_anchor against the raw markup.

    Returns the surface string the anchor denotes; by the anchor invariant it
    equals the span's text slice.
    """
    locator, _, rng = anchor.partition("@")
    lo, hi = (int(x) for x in rng.split(":"))
    m = re.fullmatch(r"([a-z0-9]+)\[(\d+)\]", locator)
    if not m:
        raise DataError(f"bad anchor: {anchor}")
    tag, occ = m.group(1), int(m.group(2))
    _, blocks, _, _ = _extract_blocks(doc.html)
    for b in blocks:
        if b.anchor_tag == tag and b.occ == occ:
            return b.text[lo:hi]
    raise DataError(f"anchor does not resolve: {anchor}")


def doc_stats(doc: Document) -> dict[str, int]:
    """Content-element counts: whitespace tokens, spans, paragraphs, sections."""
    return {
        "tk": len(doc.text.split()),
        "sp": len(doc.spans),
        "p": len(doc.paragraphs),
        "sec": len(doc.sections),
    }
