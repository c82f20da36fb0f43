"""Corpus files (JSON lines, UTF-8) and seen/unseen train/dev/test splitting.

Records serialize with a fixed field order so write(read(path)) is
byte-identical.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, TypeVar

from .models import DataError, DialogueFlow, DialogueRecord, Document

T = TypeVar("T")


def _read_jsonl(path: str | Path, parse: Callable[[dict], T]) -> list[T]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(parse(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: {exc}") from exc
    return out


def _write_jsonl(path: str | Path, records: Iterable[Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def read_documents(path: str | Path) -> list[Document]:
    return _read_jsonl(path, Document.from_dict)


def write_documents(path: str | Path, docs: Iterable[Document]) -> None:
    _write_jsonl(path, docs)


def read_flows(path: str | Path) -> list[DialogueFlow]:
    return _read_jsonl(path, DialogueFlow.from_dict)


def write_flows(path: str | Path, flows: Iterable[DialogueFlow]) -> None:
    _write_jsonl(path, flows)


def read_dialogues(path: str | Path) -> list[DialogueRecord]:
    return _read_jsonl(path, DialogueRecord.from_dict)


def write_dialogues(path: str | Path, dialogues: Iterable[DialogueRecord]) -> None:
    _write_jsonl(path, dialogues)


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)
    dialogues: list[DialogueRecord] = field(default_factory=list)

    def document(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)


def read_corpus(docs_path: str | Path, dialogues_path: str | Path) -> Corpus:
    return Corpus(documents=read_documents(docs_path), dialogues=read_dialogues(dialogues_path))


def write_corpus(corpus: Corpus, docs_path: str | Path, dialogues_path: str | Path) -> None:
    write_documents(docs_path, corpus.documents)
    write_dialogues(dialogues_path, corpus.dialogues)


@dataclass
class SplitSpec:
    train_frac: float = 0.70
    dev_frac: float = 0.15
    test_frac: float = 0.15
    unseen_frac: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(self.train_frac + self.dev_frac + self.test_frac - 1.0) > 1e-9:
            raise DataError("train/dev/test fractions must sum to 1")
        if not (0.0 <= self.unseen_frac <= 1.0):
            raise DataError("unseen_frac must be in [0,1]")


SPLIT_NAMES = ("train", "dev_seen", "dev_unseen", "test_seen", "test_unseen")


def _apportion(total: int, weights: dict[str, int]) -> dict[str, int]:
    """Largest-remainder apportionment of an integer total over weights."""
    weight_sum = sum(weights.values())
    if weight_sum == 0:
        return {k: 0 for k in weights}
    quotas = {k: total * w / weight_sum for k, w in weights.items()}
    base = {k: int(q) for k, q in quotas.items()}
    remaining = total - sum(base.values())
    order = sorted(weights, key=lambda k: (-(quotas[k] - base[k]), k))
    for k in order[:remaining]:
        base[k] += 1
    return base


def split_dataset(
    dialogues: list[DialogueRecord], spec: SplitSpec
) -> dict[str, list[DialogueRecord]]:
    """Dialogue-level split with hard unseen-document halves.

    Documents are partitioned seen/unseen per domain so that dialogues over
    unseen documents make up about unseen_frac of dev and of test; no dialogue
    touching an unseen document lands in train.  Deterministic per seed.
    """
    if not dialogues:
        raise DataError("no dialogues to split")
    rng = random.Random(spec.seed)
    n = len(dialogues)
    n_dev = round(spec.dev_frac * n)
    n_test = round(spec.test_frac * n)

    by_domain: dict[str, list[DialogueRecord]] = {}
    for d in dialogues:
        by_domain.setdefault(d.domain, []).append(d)
    domains = sorted(by_domain)
    domain_sizes = {dom: len(by_domain[dom]) for dom in domains}
    dev_quota = _apportion(n_dev, domain_sizes)
    test_quota = _apportion(n_test, domain_sizes)

    # phase 1: greedily pick unseen documents per domain, bounded by that
    # domain's dev+test capacity
    global_unseen: set[str] = set()
    for dom in domains:
        pool = by_domain[dom]
        dev_d, test_d = dev_quota[dom], test_quota[dom]
        unseen_target = round(spec.unseen_frac * dev_d) + round(spec.unseen_frac * test_d)
        capacity = dev_d + test_d

        doc_ids = sorted({doc_id for d in pool for doc_id in d.doc_ids})
        rng.shuffle(doc_ids)
        unseen_docs: set[str] = set()
        unseen_count = 0
        for doc_id in doc_ids:
            if unseen_count >= unseen_target:
                break
            candidate = unseen_docs | {doc_id}
            count = sum(1 for d in pool if set(d.doc_ids) & candidate)
            if count > capacity:
                continue
            unseen_docs = candidate
            unseen_count = count
        if unseen_target > 0 and unseen_count == 0:
            raise DataError(
                f"domain {dom}: cannot reach unseen_frac {spec.unseen_frac} "
                f"within a dev+test capacity of {capacity} dialogues; "
                f"achievable maximum is 0"
            )
        global_unseen |= unseen_docs

    # phase 2: assign dialogues; anything touching an unseen document must
    # land in a dev/test unseen half, never in train
    result: dict[str, list[DialogueRecord]] = {name: [] for name in SPLIT_NAMES}
    for dom in domains:
        pool = by_domain[dom]
        dev_d, test_d = dev_quota[dom], test_quota[dom]
        unseen_dials = [d for d in pool if set(d.doc_ids) & global_unseen]
        seen_dials = [d for d in pool if not set(d.doc_ids) & global_unseen]
        if len(unseen_dials) > dev_d + test_d:
            raise DataError(
                f"domain {dom}: {len(unseen_dials)} unseen-doc dialogues exceed "
                f"the dev+test capacity of {dev_d + test_d}"
            )
        rng.shuffle(unseen_dials)
        rng.shuffle(seen_dials)

        u = len(unseen_dials)
        u_dev = min(dev_d, max((u + 1) // 2, u - test_d))
        u_test = u - u_dev
        if len(seen_dials) < (dev_d - u_dev) + (test_d - u_test):
            raise DataError(f"domain {dom}: not enough seen dialogues to fill dev/test")

        result["dev_unseen"].extend(unseen_dials[:u_dev])
        result["test_unseen"].extend(unseen_dials[u_dev:])
        seen_iter = iter(seen_dials)
        result["dev_seen"].extend(next(seen_iter) for _ in range(dev_d - u_dev))
        result["test_seen"].extend(next(seen_iter) for _ in range(test_d - u_test))
        result["train"].extend(seen_iter)

    return result


def split_manifest(splits: dict[str, list[DialogueRecord]], spec: SplitSpec) -> dict[str, Any]:
    return {
        "spec": {
            "train_frac": spec.train_frac,
            "dev_frac": spec.dev_frac,
            "test_frac": spec.test_frac,
            "unseen_frac": spec.unseen_frac,
            "seed": spec.seed,
        },
        "sizes": {name: len(splits[name]) for name in SPLIT_NAMES},
        "splits": {name: [d.dial_id for d in splits[name]] for name in SPLIT_NAMES},
    }
