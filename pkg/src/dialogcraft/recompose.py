"""Reshape collected dialogues: Irr injection, multi-document merge, excision.

All transforms are pure; outputs always carry consecutive turn ids from 1 and
strict user/agent alternation.
"""
from __future__ import annotations

import random
from dataclasses import replace
from typing import Optional

from .models import AGENT, USER, DataError, DialogueRecord, Turn


def _renumber(turns: list[Turn]) -> list[Turn]:
    return [replace(t, turn_id=i + 1) for i, t in enumerate(turns)]


def inject_irrelevant(
    target: DialogueRecord, donor: DialogueRecord, rng: random.Random
) -> DialogueRecord:
    """Insert a contiguous donor sub-dialogue (user first, agent last) at a
    user-turn boundary of the target, marked irrelevant."""
    if set(donor.doc_ids) & set(target.doc_ids):
        raise DataError(
            f"donor {donor.dial_id} shares a document with target {target.dial_id}"
        )
    donor_user_positions = [i for i, t in enumerate(donor.turns) if t.role == USER]
    starts = [i for i in donor_user_positions if i + 1 < len(donor.turns)]
    if not starts:
        raise DataError(f"donor {donor.dial_id} has no user-led sub-dialogue")
    start = rng.choice(starts)
    last_agent = max(i for i, t in enumerate(donor.turns) if t.role == AGENT and i > start)
    length = rng.choice(range(2, last_agent - start + 2, 2))
    block = [
        replace(t, irrelevant_marker=True) for t in donor.turns[start:start + length]
    ]

    # insertion points: before any user turn of the target, or at the end
    points = [i for i, t in enumerate(target.turns) if t.role == USER]
    points.append(len(target.turns))
    at = rng.choice(points)
    turns = _renumber(target.turns[:at] + block + target.turns[at:])
    out = replace(target, turns=turns)
    out.validate()
    return out


def merge_multidoc(parts: list[DialogueRecord]) -> DialogueRecord:
    """Concatenate sub-dialogues grounded in distinct documents into one."""
    if not parts:
        raise DataError("nothing to merge")
    if len(parts) == 1:
        return parts[0]
    primaries = [p.primary_doc_id for p in parts]
    if len(set(primaries)) != len(primaries):
        raise DataError("merge parts must be grounded in distinct documents")
    for p in parts:
        if not p.turns or p.turns[0].role != USER:
            raise DataError(f"{p.dial_id}: merge part must start with a user turn")
    for a, b in zip(parts, parts[1:]):
        if a.turns[-1].role != AGENT:
            raise DataError(
                f"alternation violated at seam {a.dial_id}/{b.dial_id}"
            )

    turns = _renumber([t for p in parts for t in p.turns])
    doc_ids: list[str] = []
    for p in parts:
        for d in p.doc_ids:
            if d not in doc_ids:
                doc_ids.append(d)
    domains = []
    for p in parts:
        if p.domain not in domains:
            domains.append(p.domain)
    out = DialogueRecord(
        dial_id="+".join(p.dial_id for p in parts),
        doc_ids=doc_ids,
        domain="+".join(domains),
        turns=turns,
    )
    out.validate()
    return out


def excise_rejected(
    d: DialogueRecord, rejected_turn_ids: list[int]
) -> Optional[DialogueRecord]:
    """Drop the earliest rejected turn and everything after it; a dialogue
    left with fewer than two turns is dropped entirely (returns None)."""
    if not rejected_turn_ids:
        return d
    known = {t.turn_id for t in d.turns}
    unknown = [tid for tid in rejected_turn_ids if tid not in known]
    if unknown:
        raise DataError(f"{d.dial_id}: rejected turn ids not in dialogue: {unknown}")
    cut = min(rejected_turn_ids)
    kept = [t for t in d.turns if t.turn_id < cut]
    if len(kept) < 2:
        return None
    out = replace(d, turns=_renumber(kept))
    out.validate()
    return out
