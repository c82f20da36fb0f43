"""BM25 fixture scores are hand-applied from the scoring formula:

    idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5))
    score += idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl))

per occurrence of each query token, with k1=1.5, b=0.75.
"""
import math
import random

import pytest

from dialogcraft.evals.bm25 import bm25_build, bm25_rank
from dialogcraft.models import DataError

CORPUS = {
    "d1": "apply online for housing grants",  # dl 5
    "d2": "call office to apply",             # dl 4
    "d3": "housing office hours",             # dl 3
}
# N=3, avgdl=4; norm(dl) = 1.5*(0.25 + 0.75*dl/4)
NORM_D1 = 1.5 * (0.25 + 0.75 * 5 / 4)  # 1.78125
NORM_D2 = 1.5 * (0.25 + 0.75 * 4 / 4)  # 1.5
NORM_D3 = 1.5 * (0.25 + 0.75 * 3 / 4)  # 1.21875
IDF_DF2 = math.log(1 + (3 - 2 + 0.5) / (2 + 0.5))  # ln(1.6)
IDF_DF1 = math.log(1 + (3 - 1 + 0.5) / (1 + 0.5))  # ln(8/3)


@pytest.fixture(scope="module")
def index():
    return bm25_build(CORPUS, k1=1.5, b=0.75)


def test_hand_scores_two_term_query(index):
    # "apply" (df 2) and "housing" (df 2), tf 1 everywhere they occur
    expected = {
        "d1": IDF_DF2 * 2.5 / (1 + NORM_D1) + IDF_DF2 * 2.5 / (1 + NORM_D1),
        "d2": IDF_DF2 * 2.5 / (1 + NORM_D2),
        "d3": IDF_DF2 * 2.5 / (1 + NORM_D3),
    }
    for doc_id, want in expected.items():
        assert abs(index.score("apply housing", doc_id) - want) < 1e-9
    ranked = bm25_rank(index, "apply housing")
    assert [d for d, _ in ranked] == ["d1", "d3", "d2"]


def test_hand_scores_rare_term(index):
    assert abs(index.score("online", "d1") - IDF_DF1 * 2.5 / (1 + NORM_D1)) < 1e-9
    assert index.score("online", "d2") == 0.0
    assert index.score("online", "d3") == 0.0


def test_query_multiset_counts_twice(index):
    single = index.score("apply", "d2")
    assert abs(index.score("apply apply", "d2") - 2 * single) < 1e-9


def test_absent_term_contributes_zero(index):
    with_unknown = index.score("zebra housing", "d3")
    assert abs(with_unknown - index.score("housing", "d3")) < 1e-9
    assert index.score("zebra", "d1") == 0.0


def test_term_frequency_saturation_hand_case():
    # e1 has "apply" twice: tf=2, dl=3; avgdl = (3+2+2)/3 = 7/3
    corpus = {"e1": "apply apply now", "e2": "apply later", "e3": "never mind"}
    idx = bm25_build(corpus)
    idf_apply = math.log(1 + (3 - 2 + 0.5) / (2 + 0.5))
    norm_e1 = 1.5 * (0.25 + 0.75 * 3 / (7 / 3))
    norm_e2 = 1.5 * (0.25 + 0.75 * 2 / (7 / 3))
    assert abs(idx.score("apply", "e1") - idf_apply * 2 * 2.5 / (2 + norm_e1)) < 1e-9
    assert abs(idx.score("apply", "e2") - idf_apply * 1 * 2.5 / (1 + norm_e2)) < 1e-9


def test_unique_match_ranked_first(index):
    assert bm25_rank(index, "grants")[0][0] == "d1"
    assert bm25_rank(index, "hours")[0][0] == "d3"


def test_ties_broken_by_doc_id(index):
    ranked = bm25_rank(index, "zebra")  # all scores 0
    assert [d for d, _ in ranked] == ["d1", "d2", "d3"]


def test_empty_query_empty_ranking(index):
    assert bm25_rank(index, "") == []
    assert bm25_rank(index, "the a an") == []  # normalizes to nothing


def test_empty_corpus_rejected():
    with pytest.raises(DataError):
        bm25_build({})


def test_monotonicity_in_term_frequency():
    """Adding occurrences of a query term to one document (others fixed)
    never lowers that document's rank for that query."""
    rng = random.Random(21)
    vocab = ["service", "form", "office", "grant", "claim", "letter"]
    for _ in range(30):
        base = {
            f"m{j}": " ".join(rng.choices(vocab, k=rng.randint(3, 8))) for j in range(4)
        }
        target = rng.choice(list(base))
        term = rng.choice(vocab)
        if term not in base[target].split():
            base[target] += f" {term}"
        before = [d for d, _ in bm25_build(base).rank(term)].index(target)
        boosted = dict(base)
        boosted[target] += f" {term} {term}"
        after = [d for d, _ in bm25_build(boosted).rank(term)].index(target)
        assert after <= before
