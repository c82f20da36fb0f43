"""Shared data model: documents, spans, dialogue flows, and dialogue records.

Everything here is a plain dataclass with a stable dict form (``to_dict`` /
``from_dict``) so corpus files round-trip byte-identically.  Character offsets
are 0-based and end-exclusive, always into ``Document.text``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

USER = "user"
AGENT = "agent"


class DataError(ValueError):
    """Raised for malformed or contract-violating input data."""

# span tags
TAG_TITLE = "title"
TAG_LIST_ITEM = "list_item"
TAG_CLAUSE = "clause"
TAG_SENTENCE = "sentence"

# span-graph node roles
ROLE_PRECONDITION = "precondition"
ROLE_SOLUTION = "solution"
ROLE_TITLE = "title"
ROLE_OTHER = "other"

# candidate-pool statuses
STATUS_FRESH = "fresh"
STATUS_SELECTED = "selected"
STATUS_ESTABLISHED = "established"
STATUS_EXCLUDED = "excluded"

# span-graph edge kinds
EDGE_CHILD = "child"
EDGE_SIBLING = "sibling"
EDGE_CONDITION = "condition"
EDGE_CONTRAST = "contrast"
EDGE_DISJUNCTION = "disjunction"


class DialogueAct(str, Enum):
    USER_QUERY = "user_request_query"
    USER_YESNO = "user_respond_yesno"
    AGENT_QUERY = "agent_request_query"
    AGENT_REPLY = "agent_respond_reply"

    @property
    def role(self) -> str:
        return USER if self.value.startswith("user_") else AGENT


class RejectionReason(str, Enum):
    """Closed set of scene-rejection reasons offered to contributors."""

    NOT_A_CONDITION = "not-a-contextual-condition"
    NOT_A_SOLUTION = "not-a-solution"
    NOT_COHERENT = "cannot-write-coherent-turn"
    NOT_ENOUGH_INFO = "not-enough-information"
    NOT_COMPREHENSIBLE = "not-comprehensible"
    OTHER = "other"

    @property
    def label(self) -> str:
        return _REJECTION_LABELS[self]

    @classmethod
    def parse(cls, value: str) -> "RejectionReason":
        """Accept either the slug or the verbatim display sentence."""
        value = value.strip()
        for reason in cls:
            if value == reason.value or value == reason.label:
                return reason
        raise ValueError(f"unknown rejection reason: {value!r}")


_REJECTION_LABELS = {
    RejectionReason.NOT_A_CONDITION: "The selected-text is not a contextual condition.",
    RejectionReason.NOT_A_SOLUTION: "The selected-text is not a solution to the query.",
    RejectionReason.NOT_COHERENT: "Cannot write a turn to be coherent with the chat history.",
    RejectionReason.NOT_ENOUGH_INFO: "There is not enough information in the selected (or adjacent) text.",
    RejectionReason.NOT_COMPREHENSIBLE: "The selected-text is not Comprehensible.",
    RejectionReason.OTHER: "Other.",
}


@dataclass
class Span:
    """A grounding unit indexed into both the plain text and the markup."""

    id_sp: str
    start: int
    end: int
    tag: str  # title | list_item | clause | sentence
    parent_p: str  # paragraph id, or section id for title spans
    sentence_id: int
    html_anchor: str  # "<tag>[<n>]@<local_start>:<local_end>"

    def text(self, doc_text: str) -> str:
        return doc_text[self.start:self.end]

    def to_dict(self) -> dict[str, Any]:
        return {
            "id_sp": self.id_sp,
            "start": self.start,
            "end": self.end,
            "tag": self.tag,
            "parent_p": self.parent_p,
            "sentence_id": self.sentence_id,
            "html_anchor": self.html_anchor,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Span":
        return cls(
            id_sp=d["id_sp"],
            start=d["start"],
            end=d["end"],
            tag=d["tag"],
            parent_p=d["parent_p"],
            sentence_id=d["sentence_id"],
            html_anchor=d["html_anchor"],
        )


@dataclass
class Section:
    sec_id: str
    title_span: str
    level: int  # header depth, >= 1
    parent_sec: Optional[str]
    start: int
    end: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "sec_id": self.sec_id,
            "title_span": self.title_span,
            "level": self.level,
            "parent_sec": self.parent_sec,
            "start": self.start,
            "end": self.end,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Section":
        return cls(
            sec_id=d["sec_id"],
            title_span=d["title_span"],
            level=d["level"],
            parent_sec=d["parent_sec"],
            start=d["start"],
            end=d["end"],
        )


@dataclass
class Paragraph:
    p_id: str
    kind: str  # prose | list_item
    parent_sec: str
    start: int
    end: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "p_id": self.p_id,
            "kind": self.kind,
            "parent_sec": self.parent_sec,
            "start": self.start,
            "end": self.end,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Paragraph":
        return cls(
            p_id=d["p_id"],
            kind=d["kind"],
            parent_sec=d["parent_sec"],
            start=d["start"],
            end=d["end"],
        )


@dataclass
class Document:
    """A parsed page: hierarchical sections, paragraphs, and indexed spans."""

    doc_id: str
    domain: str
    title: str
    url: str
    text: str
    html: str
    sections: list[Section] = field(default_factory=list)
    paragraphs: list[Paragraph] = field(default_factory=list)
    spans: list[Span] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def span(self, id_sp: str) -> Span:
        try:
            return self._span_index[id_sp]
        except AttributeError:
            self._span_index = {s.id_sp: s for s in self.spans}
            return self._span_index[id_sp]

    def span_text(self, id_sp: str) -> str:
        return self.span(id_sp).text(self.text)

    def paragraph(self, p_id: str) -> Paragraph:
        for p in self.paragraphs:
            if p.p_id == p_id:
                return p
        raise KeyError(p_id)

    def section(self, sec_id: str) -> Section:
        for s in self.sections:
            if s.sec_id == sec_id:
                return s
        raise KeyError(sec_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "domain": self.domain,
            "title": self.title,
            "url": self.url,
            "text": self.text,
            "html": self.html,
            "spans": [s.to_dict() for s in self.spans],
            "sections": [s.to_dict() for s in self.sections],
            "paragraphs": [p.to_dict() for p in self.paragraphs],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Document":
        return cls(
            doc_id=d["doc_id"],
            domain=d["domain"],
            title=d["title"],
            url=d["url"],
            text=d["text"],
            html=d["html"],
            sections=[Section.from_dict(x) for x in d["sections"]],
            paragraphs=[Paragraph.from_dict(x) for x in d["paragraphs"]],
            spans=[Span.from_dict(x) for x in d["spans"]],
            warnings=list(d.get("warnings", [])),
        )


@dataclass
class DialogueScene:
    """One turn specification: who speaks, how, and grounded where."""

    role: str
    da: DialogueAct
    grounding_sp_ids: list[str]
    yesno_outcome: Optional[str] = None  # "yes" | "no", only for user_respond_yesno
    irrelevant_marker: bool = False

    def __post_init__(self) -> None:
        if self.role != self.da.role:
            raise ValueError(f"act {self.da.value} cannot appear on a {self.role} turn")
        if not self.irrelevant_marker and not self.grounding_sp_ids:
            raise ValueError("non-Irr scene needs at least one grounding span")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "role": self.role,
            "da": self.da.value,
            "grounding_sp_ids": list(self.grounding_sp_ids),
        }
        if self.yesno_outcome is not None:
            d["yesno_outcome"] = self.yesno_outcome
        if self.irrelevant_marker:
            d["irrelevant_marker"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DialogueScene":
        return cls(
            role=d["role"],
            da=DialogueAct(d["da"]),
            grounding_sp_ids=list(d["grounding_sp_ids"]),
            yesno_outcome=d.get("yesno_outcome"),
            irrelevant_marker=d.get("irrelevant_marker", False),
        )


@dataclass
class DialogueFlow:
    """A seeded sequence of dialogue scenes; the skeleton of one dialogue."""

    flow_id: str
    doc_id: str
    seed: int
    scenes: list[DialogueScene]

    def __post_init__(self) -> None:
        for i, scene in enumerate(self.scenes):
            expected = USER if i % 2 == 0 else AGENT
            if scene.role != expected:
                raise ValueError(f"scene {i} breaks user/agent alternation")

    def to_dict(self) -> dict[str, Any]:
        return {
            "flow_id": self.flow_id,
            "doc_id": self.doc_id,
            "seed": self.seed,
            "scenes": [
                {"turn_id": i + 1, **s.to_dict()} for i, s in enumerate(self.scenes)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DialogueFlow":
        scenes = [DialogueScene.from_dict(s) for s in d["scenes"]]
        return cls(flow_id=d["flow_id"], doc_id=d["doc_id"], seed=d["seed"], scenes=scenes)


@dataclass
class Turn:
    """A written dialogue turn with its inherited scene annotation."""

    turn_id: int
    role: str
    da: DialogueAct
    grounding_sp_ids: list[str]
    doc_id: str
    utterance: str
    irrelevant_marker: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_id": self.turn_id,
            "role": self.role,
            "da": self.da.value,
            "grounding_sp_ids": list(self.grounding_sp_ids),
            "doc_id": self.doc_id,
            "irrelevant_marker": self.irrelevant_marker,
            "utterance": self.utterance,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Turn":
        return cls(
            turn_id=d["turn_id"],
            role=d["role"],
            da=DialogueAct(d["da"]),
            grounding_sp_ids=list(d["grounding_sp_ids"]),
            doc_id=d["doc_id"],
            utterance=d["utterance"],
            irrelevant_marker=d.get("irrelevant_marker", False),
        )


@dataclass
class DialogueRecord:
    """A completed dialogue grounded in one or more documents."""

    dial_id: str
    doc_ids: list[str]
    domain: str
    turns: list[Turn]

    @property
    def primary_doc_id(self) -> str:
        return self.doc_ids[0]

    def validate(self) -> None:
        for i, turn in enumerate(self.turns):
            if turn.turn_id != i + 1:
                raise ValueError(f"{self.dial_id}: turn ids not consecutive from 1")
            expected = USER if i % 2 == 0 else AGENT
            if turn.role != expected:
                raise ValueError(f"{self.dial_id}: turn {turn.turn_id} breaks alternation")

    def to_dict(self) -> dict[str, Any]:
        return {
            "dial_id": self.dial_id,
            "doc_ids": list(self.doc_ids),
            "domain": self.domain,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DialogueRecord":
        return cls(
            dial_id=d["dial_id"],
            doc_ids=list(d["doc_ids"]),
            domain=d["domain"],
            turns=[Turn.from_dict(t) for t in d["turns"]],
        )
