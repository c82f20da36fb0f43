"""Metrics and non-neural baselines: EM/F1, BLEU, sliding windows, BM25."""
from .bm25 import Bm25Index, bm25_build, bm25_rank
from .chunking import Trunk, chunk_document
from .metrics import bleu, exact_match, normalize_text, token_f1
from .reports import EvalReport, eval_generation, eval_grounding, eval_retrieval

__all__ = [
    "Bm25Index",
    "bm25_build",
    "bm25_rank",
    "Trunk",
    "chunk_document",
    "bleu",
    "exact_match",
    "normalize_text",
    "token_f1",
    "EvalReport",
    "eval_generation",
    "eval_grounding",
    "eval_retrieval",
]
