"""BM25 document ranking over an inverted index.

Tokenization reuses the metric normalization (lowercase, strip punctuation
and articles) followed by a whitespace split, so retrieval and span metrics
share one pipeline.
"""
from __future__ import annotations

import math
from collections import Counter

from ..models import DataError
from .metrics import normalize_text


def tokenize(text: str) -> list[str]:
    return normalize_text(text).split()


class Bm25Index:
    """Per-term document frequencies plus per-doc term frequencies/lengths."""

    def __init__(self, corpus: dict[str, str], k1: float = 1.5, b: float = 0.75):
        if not corpus:
            raise DataError("empty corpus")
        self.k1 = k1
        self.b = b
        self.doc_ids = sorted(corpus)
        self.term_freqs: dict[str, Counter] = {}
        self.doc_lens: dict[str, int] = {}
        for doc_id in self.doc_ids:
            tokens = tokenize(corpus[doc_id])
            self.term_freqs[doc_id] = Counter(tokens)
            self.doc_lens[doc_id] = len(tokens)
        self.n_docs = len(self.doc_ids)
        self.avgdl = sum(self.doc_lens.values()) / self.n_docs
        self.doc_freqs: Counter = Counter()
        for tf in self.term_freqs.values():
            for term in tf:
                self.doc_freqs[term] += 1

    def idf(self, term: str) -> float:
        df = self.doc_freqs.get(term, 0)
        if df == 0:
            return 0.0
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def score(self, query_text: str, doc_id: str) -> float:
        tf = self.term_freqs[doc_id]
        dl = self.doc_lens[doc_id]
        norm = self.k1 * (1.0 - self.b + self.b * dl / self.avgdl) if self.avgdl else 0.0
        s = 0.0
        for term in tokenize(query_text):
            f = tf.get(term, 0)
            if f == 0:
                continue
            s += self.idf(term) * f * (self.k1 + 1.0) / (f + norm)
        return s

    def rank(self, query_text: str) -> list[tuple[str, float]]:
        """All documents by descending score; ties broken by doc_id."""
        if not tokenize(query_text):
            return []
        scored = [(doc_id, self.score(query_text, doc_id)) for doc_id in self.doc_ids]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored


def bm25_build(corpus: dict[str, str], k1: float = 1.5, b: float = 0.75) -> Bm25Index:
    return Bm25Index(corpus, k1=k1, b=b)


def bm25_rank(index: Bm25Index, query_text: str) -> list[tuple[str, float]]:
    return index.rank(query_text)
