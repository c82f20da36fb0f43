"""Evaluation reports for grounding, generation, and retrieval tasks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from ..models import AGENT, USER, DataError, DialogueRecord, Document
from .bm25 import Bm25Index
from .metrics import bleu, exact_match, token_f1


@dataclass
class EvalReport:
    task: str
    aggregates: dict[str, float]
    per_item: list[dict[str, Any]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in self.aggregates.items():
            if not (0.0 <= value <= 100.0):
                raise DataError(f"aggregate {name} out of [0,100]: {value}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "aggregates": self.aggregates,
            "counts": self.counts,
            "per_item": self.per_item,
        }


def gold_grounding_items(
    dialogues: Iterable[DialogueRecord], roles: tuple[str, ...] = (USER,)
) -> list[dict[str, Any]]:
    """One gold item per grounded turn; Irr turns carry an empty gold span."""
    items = []
    for d in dialogues:
        for t in d.turns:
            if t.role not in roles:
                continue
            items.append(
                {
                    "id": f"{d.dial_id}-t{t.turn_id}",
                    "doc_id": t.doc_id,
                    "sp_ids": [] if t.irrelevant_marker else list(t.grounding_sp_ids),
                    "irrelevant": t.irrelevant_marker,
                }
            )
    return items


def _prediction_map(predictions: Iterable[dict[str, Any]]) -> dict[str, str]:
    out = {}
    for p in predictions:
        out[p["id"]] = p.get("span_text", p.get("text", ""))
    return out


def eval_grounding(
    predictions: Iterable[dict[str, Any]],
    gold_items: list[dict[str, Any]],
    docs: Iterable[Document],
) -> EvalReport:
    """EM/F1 of predicted span text against gold span surface text, with the
    Irr items aggregated separately (gold is empty; credit for empty output)."""
    by_id = {d.doc_id: d for d in docs}
    preds = _prediction_map(predictions)
    gold_ids = {g["id"] for g in gold_items}
    missing = gold_ids - preds.keys()
    extra = preds.keys() - gold_ids
    if missing or extra:
        raise DataError(
            f"prediction/gold id mismatch (missing {sorted(missing)[:3]}, extra {sorted(extra)[:3]})"
        )

    per_item = []
    for g in gold_items:
        if g["irrelevant"] or not g["sp_ids"]:
            gold_text = ""
        else:
            doc = by_id.get(g["doc_id"])
            if doc is None:
                raise DataError(f"gold item {g['id']}: unknown document {g['doc_id']}")
            gold_text = " ".join(doc.span_text(sid) for sid in g["sp_ids"])
        pred_text = preds[g["id"]]
        per_item.append(
            {
                "id": g["id"],
                "em": exact_match(pred_text, gold_text),
                "f1": token_f1(pred_text, gold_text),
                "irrelevant": bool(g["irrelevant"]),
            }
        )

    def agg(items: list[dict[str, Any]], prefix: str) -> dict[str, float]:
        if not items:
            return {}
        return {
            f"{prefix}EM": 100.0 * sum(i["em"] for i in items) / len(items),
            f"{prefix}F1": 100.0 * sum(i["f1"] for i in items) / len(items),
        }

    relevant = [i for i in per_item if not i["irrelevant"]]
    irr = [i for i in per_item if i["irrelevant"]]
    aggregates = agg(per_item, "") | agg(relevant, "relevant_") | agg(irr, "irr_")
    return EvalReport(
        task="grounding",
        aggregates=aggregates,
        per_item=per_item,
        counts={"items": len(per_item), "relevant": len(relevant), "irrelevant": len(irr)},
    )


def gold_generation_refs(
    dialogues: Iterable[DialogueRecord], role: str = AGENT
) -> dict[str, str]:
    refs = {}
    for d in dialogues:
        for t in d.turns:
            if t.role == role:
                refs[f"{d.dial_id}-t{t.turn_id}"] = t.utterance
    return refs


def eval_generation(
    predictions: Iterable[dict[str, Any]], references: dict[str, str]
) -> EvalReport:
    """Corpus BLEU-1..4 of generated utterances against written references."""
    preds = _prediction_map(predictions)
    missing = references.keys() - preds.keys()
    if missing:
        raise DataError(f"predictions missing for {sorted(missing)[:3]}")
    ids = sorted(references)
    cands = [preds[i] for i in ids]
    refs = [references[i] for i in ids]
    scores = bleu(cands, refs)
    per_item = [{"id": i, "candidate": c, "reference": r} for i, c, r in zip(ids, cands, refs)]
    return EvalReport(
        task="generation", aggregates=scores, per_item=per_item, counts={"items": len(ids)}
    )


def eval_retrieval(
    dialogues: Iterable[DialogueRecord],
    docs: Iterable[Document],
    n_turns: int,
    k_list: tuple[int, ...] = (1, 5, 10),
    index: Optional[Bm25Index] = None,
) -> EvalReport:
    """BM25 recall@k with the earliest n turns concatenated as the query."""
    dialogues = list(dialogues)
    docs = list(docs)
    if index is None:
        index = Bm25Index({d.doc_id: d.text for d in docs})
    per_item = []
    for d in dialogues:
        if len(d.turns) < n_turns:
            raise DataError(f"{d.dial_id}: fewer than {n_turns} turns")
        query = " ".join(t.utterance for t in d.turns[:n_turns])
        ranked = [doc_id for doc_id, _ in index.rank(query)]
        try:
            rank = ranked.index(d.primary_doc_id) + 1
        except ValueError:
            rank = None
        per_item.append({"dial_id": d.dial_id, "gold_doc_id": d.primary_doc_id, "rank": rank})

    n = len(per_item)
    if n == 0:
        raise DataError("no dialogues to evaluate")
    aggregates = {
        f"R@{k}": 100.0 * sum(1 for i in per_item if i["rank"] and i["rank"] <= k) / n
        for k in k_list
    }
    return EvalReport(
        task="retrieval", aggregates=aggregates, per_item=per_item, counts={"items": n}
    )
