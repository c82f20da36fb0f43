"""Span graph: condition/solution roles on spans, structural and discourse edges.

Child edges follow the document structure (section title -> contained spans,
list introducer -> list items); discourse edges come from clause connectives.
Only condition-class edges feed ``conditions_for`` and thereby drive
verification sub-dialogues downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .ingest import connective_matches
from .models import (
    EDGE_CHILD,
    EDGE_CONDITION,
    EDGE_CONTRAST,
    EDGE_DISJUNCTION,
    EDGE_SIBLING,
    ROLE_OTHER,
    ROLE_PRECONDITION,
    ROLE_SOLUTION,
    ROLE_TITLE,
    STATUS_FRESH,
    TAG_CLAUSE,
    TAG_LIST_ITEM,
    TAG_SENTENCE,
    TAG_TITLE,
    DataError,
    Document,
)

CONDITION_CONNECTIVES = {
    "if", "unless", "when", "whenever", "until", "in case", "provided that", "as long as",
}
CONTRAST_CONNECTIVES = {"but", "however", "otherwise"}
DISJUNCTION_CONNECTIVES = {"or"}

_EDGE_KIND_BY_CONNECTIVE = (
    {c: EDGE_CONDITION for c in CONDITION_CONNECTIVES}
    | {c: EDGE_CONTRAST for c in CONTRAST_CONNECTIVES}
    | {c: EDGE_DISJUNCTION for c in DISJUNCTION_CONNECTIVES}
)

# inherited conditions reach up this many child-edge levels
MAX_INHERIT_DEPTH = 2


@dataclass
class SpanNode:
    span_id: str
    role: str
    status: str = STATUS_FRESH


@dataclass
class Relation:
    src: str
    dst: str
    kind: str

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise DataError(f"self-loop on {self.src}")


@dataclass
class SpanGraph:
    doc_id: str
    nodes: dict[str, SpanNode] = field(default_factory=dict)
    edges: list[Relation] = field(default_factory=list)

    def has_edge(self, src: str, dst: str, kind: str) -> bool:
        return any(e.src == src and e.dst == dst and e.kind == kind for e in self.edges)

    def add_edge(self, src: str, dst: str, kind: str) -> None:
        if src not in self.nodes or dst not in self.nodes:
            raise DataError(f"edge endpoint missing: {src} -> {dst}")
        if not self.has_edge(src, dst, kind):
            self.edges.append(Relation(src, dst, kind))

    def child_parent(self, span_id: str) -> str | None:
        for e in self.edges:
            if e.kind == EDGE_CHILD and e.dst == span_id:
                return e.src
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "nodes": [{"span_id": n.span_id, "role": n.role} for n in self.nodes.values()],
            "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SpanGraph":
        g = cls(doc_id=d["doc_id"])
        for n in d["nodes"]:
            g.nodes[n["span_id"]] = SpanNode(span_id=n["span_id"], role=n["role"])
        for e in d["edges"]:
            g.add_edge(e["src"], e["dst"], e["kind"])
        return g


def _leading_connective(text: str) -> str | None:
    matches = connective_matches(text)
    if matches and matches[0][0] == 0:
        return matches[0][1]
    return None


def _initial_role(tag: str, span_text: str) -> str:
    if tag == TAG_TITLE:
        return ROLE_TITLE
    if tag == TAG_CLAUSE:
        return ROLE_PRECONDITION if _leading_connective(span_text) else ROLE_SOLUTION
    if tag in (TAG_LIST_ITEM, TAG_SENTENCE):
        return ROLE_SOLUTION
    return ROLE_OTHER


def build_graph(doc: Document) -> SpanGraph:
    """Build nodes with initial roles plus child and sibling edges.

    Child edges: section title -> contained spans of that section (innermost
    wins), parent section title -> child section title, and list-introducing
    span -> list-item spans, so the child relation is a forest.
    """
    if not doc.spans:
        raise DataError(f"{doc.doc_id}: empty document")

    graph = SpanGraph(doc_id=doc.doc_id)
    for sp in doc.spans:
        graph.nodes[sp.id_sp] = SpanNode(sp.id_sp, _initial_role(sp.tag, sp.text(doc.text)))

    sec_title = {s.sec_id: s.title_span for s in doc.sections}

    # section hierarchy between title spans
    for sec in doc.sections:
        if sec.parent_sec and sec_title.get(sec.parent_sec) and sec_title.get(sec.sec_id):
            graph.add_edge(sec_title[sec.parent_sec], sec_title[sec.sec_id], EDGE_CHILD)

    # list introducer: the last span of the prose paragraph right before a run
    # of list items in the same section
    spans_by_para: dict[str, list] = {}
    for sp in doc.spans:
        if sp.tag != TAG_TITLE:
            spans_by_para.setdefault(sp.parent_p, []).append(sp)
    introducer_of: dict[str, str] = {}  # list-item p_id -> introducer span id
    for i, para in enumerate(doc.paragraphs):
        if para.kind != "list_item":
            continue
        j = i
        while j > 0 and doc.paragraphs[j - 1].kind == "list_item":
            j -= 1
        if j > 0:
            prev = doc.paragraphs[j - 1]
            if prev.kind == "prose" and prev.parent_sec == para.parent_sec:
                prev_spans = spans_by_para.get(prev.p_id)
                if prev_spans:
                    introducer_of[para.p_id] = prev_spans[-1].id_sp

    para_sec = {p.p_id: p.parent_sec for p in doc.paragraphs}
    parent_of: dict[str, str] = {}
    for sp in doc.spans:
        if sp.tag == TAG_TITLE:
            continue
        intro = introducer_of.get(sp.parent_p)
        if intro and intro != sp.id_sp:
            parent_of[sp.id_sp] = intro
        else:
            title = sec_title.get(para_sec[sp.parent_p], "")
            if title:
                parent_of[sp.id_sp] = title
    for child, parent in parent_of.items():
        graph.add_edge(parent, child, EDGE_CHILD)

    # sibling edges between adjacent spans sharing a child-edge parent
    order = {sp.id_sp: sp.start for sp in doc.spans}
    by_parent: dict[str, list[str]] = {}
    for e in graph.edges:
        if e.kind == EDGE_CHILD:
            by_parent.setdefault(e.src, []).append(e.dst)
    for siblings in by_parent.values():
        siblings.sort(key=lambda sid: order[sid])
        for a, b in zip(siblings, siblings[1:]):
            graph.add_edge(a, b, EDGE_SIBLING)

    return graph


def label_condition_edges(graph: SpanGraph, doc: Document) -> SpanGraph:
    """Add discourse edges from connective-initiated clauses to their main clause.

    The subordinate clause becomes a precondition, the main clause a solution.
    Idempotent: relabeling adds no duplicate edges.
    """
    by_sentence: dict[int, list] = {}
    for sp in doc.spans:
        if sp.tag == TAG_CLAUSE:
            by_sentence.setdefault(sp.sentence_id, []).append(sp)

    for spans in by_sentence.values():
        spans.sort(key=lambda s: s.start)
        mains = [s for s in spans if not _leading_connective(s.text(doc.text))]
        if not mains:
            continue
        for sub in spans:
            conn = _leading_connective(sub.text(doc.text))
            if conn is None:
                continue
            following = [m for m in mains if m.start > sub.start]
            main = following[0] if following else mains[-1]
            kind = _EDGE_KIND_BY_CONNECTIVE[conn]
            graph.add_edge(sub.id_sp, main.id_sp, kind)
            graph.nodes[sub.id_sp].role = ROLE_PRECONDITION
            graph.nodes[main.id_sp].role = ROLE_SOLUTION
    return graph


def build_labeled_graph(doc: Document) -> SpanGraph:
    return label_condition_edges(build_graph(doc), doc)


def conditions_for(graph: SpanGraph, span_id: str) -> list[str]:
    """Preconditions of a span: direct condition edges plus conditions carried
    by child-edge ancestors up to two levels."""
    if span_id not in graph.nodes:
        raise DataError(f"unknown span: {span_id}")
    result: list[str] = []

    def direct(sid: str) -> list[str]:
        return [e.src for e in graph.edges if e.kind == EDGE_CONDITION and e.dst == sid]

    for c in direct(span_id):
        if c != span_id and c not in result:
            result.append(c)
    ancestor = graph.child_parent(span_id)
    depth = 0
    while ancestor is not None and depth < MAX_INHERIT_DEPTH:
        for c in direct(ancestor):
            if c != span_id and c not in result:
                result.append(c)
        ancestor = graph.child_parent(ancestor)
        depth += 1
    return result


def solutions_for(graph: SpanGraph, span_id: str) -> list[str]:
    """Spans whose precondition set contains the given span."""
    if span_id not in graph.nodes:
        raise DataError(f"unknown span: {span_id}")
    return [sid for sid in graph.nodes if span_id in conditions_for(graph, sid)]
