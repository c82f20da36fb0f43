"""Answer-span metrics (exact match, token F1) and corpus BLEU.

EM/F1 follow the usual extractive-QA convention: answers are lowercased,
punctuation and articles stripped, whitespace collapsed.  A pair of empty
answers scores full credit on both metrics.
"""
from __future__ import annotations

import math
import re
import string
from collections import Counter

from ..models import DataError

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_text(s: str) -> str:
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES_RE.sub(" ", s)
    return " ".join(s.split())


def exact_match(pred: str, gold: str) -> int:
    return int(normalize_text(pred) == normalize_text(gold))


def token_f1(pred: str, gold: str) -> float:
    pred_tokens = normalize_text(pred).split()
    gold_tokens = normalize_text(gold).split()
    if not pred_tokens and not gold_tokens:
        return 1.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list[str], references: list[str]) -> dict[str, float]:
    """Corpus-level BLEU-1..4 (uniform weights, no smoothing), as percentages.

    One reference per candidate; tokens are whitespace-delimited.
    """
    if len(candidates) != len(references):
        raise DataError("candidates and references must be equal-length")
    if not candidates:
        raise DataError("empty corpus")

    matches = [0] * 5
    totals = [0] * 5
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        c_tokens = cand.split()
        r_tokens = ref.split()
        cand_len += len(c_tokens)
        ref_len += len(r_tokens)
        for n in range(1, 5):
            c_grams = _ngrams(c_tokens, n)
            r_grams = _ngrams(r_tokens, n)
            matches[n] += sum(min(count, r_grams[g]) for g, count in c_grams.items())
            totals[n] += max(0, len(c_tokens) - n + 1)

    if cand_len == 0:
        return {f"BLEU-{n}": 0.0 for n in range(1, 5)}
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)

    precisions = [matches[n] / totals[n] if totals[n] else 0.0 for n in range(1, 5)]
    scores = {}
    for k in range(1, 5):
        if any(p == 0.0 for p in precisions[:k]):
            scores[f"BLEU-{k}"] = 0.0
        else:
            log_avg = sum(math.log(p) for p in precisions[:k]) / k
            scores[f"BLEU-{k}"] = 100.0 * brevity * math.exp(log_avg)
    return scores
