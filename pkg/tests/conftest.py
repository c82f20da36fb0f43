"""Shared fixtures: a handcrafted page plus synthetic corpora builders."""
from __future__ import annotations

import random

import pytest

from dialogcraft.graph import build_labeled_graph
from dialogcraft.ingest import parse_document, segment_spans
from dialogcraft.models import AGENT, USER, DialogueAct, DialogueRecord, Turn

# h1 + two h2 sections, 3 prose paragraphs, one 2-item list; clause material
# for if/unless plus a plain sentence and a list introducer.
FIXTURE_HTML = """<html><head><title>Benefits Guide</title></head><body>
<h1>Disability Housing Grants</h1>
<p>We offer housing grants for veterans. If your clothing has been damaged, \
you may be able to get reimbursed.</p>
<h2>Eligibility</h2>
<p>You may be eligible if you served on active duty. You can choose one of these options:</p>
<ul><li>Apply online today</li><li>Call our office</li></ul>
<h2>How to apply</h2>
<p>You must apply online unless you cannot access the internet.</p>
</body></html>"""

FIXTURE_META = {
    "doc_id": "d1",
    "domain": "va",
    "title": "Benefits Guide",
    "url": "https://example.test/benefits",
}


@pytest.fixture
def fixture_doc():
    return segment_spans(parse_document(FIXTURE_HTML, dict(FIXTURE_META)))


@pytest.fixture
def fixture_graph(fixture_doc):
    return build_labeled_graph(fixture_doc)


_CONDITIONS = [
    "If you hold a valid account",
    "If you served on active duty",
    "Unless you live abroad",
    "If your claim was approved",
    "If you filed this year",
]
_SOLUTIONS = [
    "you can use every online service",
    "you may request a housing grant",
    "you must visit a regional office",
    "you can appeal the decision",
    "you may submit a paper form",
]
_ITEMS = [
    "Apply online with your account",
    "Call the support office",
    "Mail the completed form",
    "Visit a local branch",
]
_DOMAINS = ("ssa", "va", "dmv", "studentaid")


def synth_html(doc_id: str, rng: random.Random, n_sections: int = 3) -> str:
    """A small gov-style page with conditional sentences and lists."""
    parts = [f"<html><head><title>Guide {doc_id}</title></head><body>",
             f"<h1>Program guide {doc_id}</h1>"]
    for s in range(n_sections):
        parts.append(f"<h2>Topic {s} of {doc_id}</h2>")
        cond = rng.choice(_CONDITIONS)
        sol = rng.choice(_SOLUTIONS)
        parts.append(f"<p>{cond}, {sol}. This rule applies to {doc_id} topic {s}.</p>")
        parts.append(f"<p>These are the steps for topic {s}:</p>")
        items = rng.sample(_ITEMS, 2)
        parts.append("<ul>" + "".join(f"<li>{it} for {doc_id}</li>" for it in items) + "</ul>")
    parts.append("</body></html>")
    return "".join(parts)


def make_corpus(n_docs: int, seed: int = 0, domains: tuple[str, ...] = _DOMAINS):
    """Parsed + segmented synthetic documents, round-robin over domains."""
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        doc_id = f"doc{i:03d}"
        meta = {
            "doc_id": doc_id,
            "domain": domains[i % len(domains)],
            "title": f"Guide {doc_id}",
            "url": f"https://example.test/{doc_id}",
        }
        docs.append(segment_spans(parse_document(synth_html(doc_id, rng), meta)))
    return docs


@pytest.fixture(scope="session")
def flow_corpus():
    return make_corpus(20, seed=11)


def make_dialogue(
    dial_id: str,
    doc_id: str,
    domain: str,
    n_turns: int = 6,
    sp_prefix: str | None = None,
    utterances: list[str] | None = None,
) -> DialogueRecord:
    """A well-formed dialogue with alternating roles and simple scenes."""
    sp_prefix = sp_prefix or doc_id
    turns = []
    for i in range(n_turns):
        role = USER if i % 2 == 0 else AGENT
        da = DialogueAct.USER_QUERY if role == USER else DialogueAct.AGENT_REPLY
        turns.append(
            Turn(
                turn_id=i + 1,
                role=role,
                da=da,
                grounding_sp_ids=[f"{sp_prefix}-sp{i}"],
                doc_id=doc_id,
                utterance=utterances[i] if utterances else f"{dial_id} turn {i + 1}",
            )
        )
    return DialogueRecord(dial_id=dial_id, doc_ids=[doc_id], domain=domain, turns=turns)


def make_dialogue_corpus(n_dialogues: int, n_docs: int, seed: int = 0, turns: int = 6):
    """Dialogues spread evenly over documents and domains."""
    rng = random.Random(seed)
    dialogues = []
    for i in range(n_dialogues):
        doc_idx = i % n_docs
        doc_id = f"doc{doc_idx:03d}"
        domain = _DOMAINS[doc_idx % len(_DOMAINS)]
        dialogues.append(make_dialogue(f"dial{i:04d}", doc_id, domain, n_turns=turns))
    rng.shuffle(dialogues)
    return dialogues
