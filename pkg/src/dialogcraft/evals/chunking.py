"""Sliding-window document chunking with exact offset round-tripping.

Windows are token-based with a fixed stride; a gold span is mapped into
window-local character coordinates wherever it fits completely, and to the
null position (0, 0) — the beginning of the sequence — elsewhere.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..models import DataError, Document

NULL_POSITION = (0, 0)

_TOKEN_RE = re.compile(r"\S+")


@dataclass
class Trunk:
    doc_id: str
    index: int
    token_start: int
    token_end: int  # exclusive
    char_start: int
    char_end: int  # exclusive
    stride: int
    gold_local: Optional[tuple[int, int]] = None  # char range or NULL_POSITION

    def to_global(self, local_range: tuple[int, int]) -> tuple[int, int]:
        lo, hi = local_range
        return lo + self.char_start, hi + self.char_start

    def to_local(self, global_range: tuple[int, int]) -> Optional[tuple[int, int]]:
        lo, hi = global_range
        if lo >= self.char_start and hi <= self.char_end:
            return lo - self.char_start, hi - self.char_start
        return None

    def text(self, doc_text: str) -> str:
        return doc_text[self.char_start:self.char_end]


def chunk_document(
    doc: Document,
    max_tokens: int,
    stride: int,
    gold_span: Optional[tuple[int, int]] = None,
) -> list[Trunk]:
    """Cover the document with token windows whose starts differ by exactly
    the stride; count = ceil((n_tokens - max_tokens) / stride) + 1."""
    if max_tokens < 1:
        raise DataError("max_tokens must be >= 1")
    if stride < 1 or stride > max_tokens:
        raise DataError("need 1 <= stride <= max_tokens")

    tokens = [(m.start(), m.end()) for m in _TOKEN_RE.finditer(doc.text)]
    n = len(tokens)
    if n <= max_tokens:
        count = 1
    else:
        count = -(-(n - max_tokens) // stride) + 1

    trunks = []
    for i in range(count):
        t0 = i * stride
        t1 = min(t0 + max_tokens, n)
        if n == 0:
            c0 = c1 = 0
        else:
            c0 = tokens[t0][0]
            c1 = tokens[t1 - 1][1]
        trunk = Trunk(
            doc_id=doc.doc_id,
            index=i,
            token_start=t0,
            token_end=t1,
            char_start=c0,
            char_end=c1,
            stride=stride,
        )
        if gold_span is not None:
            trunk.gold_local = trunk.to_local(gold_span) or NULL_POSITION
        trunks.append(trunk)
    return trunks
