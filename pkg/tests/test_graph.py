import pytest

from dialogcraft.graph import (
    SpanGraph,
    build_graph,
    build_labeled_graph,
    conditions_for,
    label_condition_edges,
    solutions_for,
)
from dialogcraft.ingest import parse_document, segment_spans
from dialogcraft.models import DataError

from conftest import FIXTURE_META


def _doc(html):
    return segment_spans(parse_document(html, dict(FIXTURE_META)))


def test_fixture_edge_set_matches_hand_enumeration(fixture_doc, fixture_graph):
    """Hand-enumerated from the fixture structure: sp0=h1, sp1..sp3 intro
    paragraph (sentence + if-clause pair), sp4=h2, sp5/sp6 clause pair,
    sp7 list introducer, sp8/sp9 items, sp10=h2, sp11/sp12 clause pair."""
    edges = {(e.src, e.dst, e.kind) for e in fixture_graph.edges}
    expected_child = {
        ("d1-sp0", "d1-sp4"), ("d1-sp0", "d1-sp10"),  # section hierarchy
        ("d1-sp0", "d1-sp1"), ("d1-sp0", "d1-sp2"), ("d1-sp0", "d1-sp3"),
        ("d1-sp4", "d1-sp5"), ("d1-sp4", "d1-sp6"), ("d1-sp4", "d1-sp7"),
        ("d1-sp7", "d1-sp8"), ("d1-sp7", "d1-sp9"),  # introducer -> items
        ("d1-sp10", "d1-sp11"), ("d1-sp10", "d1-sp12"),
    }
    expected_sibling = {
        ("d1-sp1", "d1-sp2"), ("d1-sp2", "d1-sp3"), ("d1-sp3", "d1-sp4"),
        ("d1-sp4", "d1-sp10"), ("d1-sp5", "d1-sp6"), ("d1-sp6", "d1-sp7"),
        ("d1-sp8", "d1-sp9"), ("d1-sp11", "d1-sp12"),
    }
    expected_condition = {
        ("d1-sp2", "d1-sp3"), ("d1-sp6", "d1-sp5"), ("d1-sp12", "d1-sp11"),
    }
    assert {(s, d) for s, d, k in edges if k == "child"} == expected_child
    assert {(s, d) for s, d, k in edges if k == "sibling"} == expected_sibling
    assert {(s, d) for s, d, k in edges if k == "condition"} == expected_condition
    assert not any(k in ("contrast", "disjunction") for _, _, k in edges)


def test_fixture_roles(fixture_doc, fixture_graph):
    roles = {sid: n.role for sid, n in fixture_graph.nodes.items()}
    assert roles["d1-sp0"] == "title"
    assert roles["d1-sp2"] == "precondition"  # "If your clothing..."
    assert roles["d1-sp3"] == "solution"
    assert roles["d1-sp8"] == "solution"  # list item
    assert roles["d1-sp7"] == "solution"  # plain sentence


def test_header_direct_list_items_are_title_children():
    # list directly under a header: items hang off the title span
    doc = _doc("<body><h2>Materials</h2><ul><li>Item one</li><li>Item two</li></ul></body>")
    g = build_graph(doc)
    title = doc.sections[0].title_span
    items = [s.id_sp for s in doc.spans if s.tag == "list_item"]
    child = {(e.src, e.dst) for e in g.edges if e.kind == "child"}
    assert {(title, i) for i in items} <= child


def test_single_sentence_doc_one_node_zero_edges():
    doc = _doc("<body><p>You must apply online.</p></body>")
    g = build_graph(doc)
    assert len(g.nodes) == 1
    assert g.edges == []


def test_empty_document_rejected(fixture_doc):
    bare = parse_document("<body><p>Text here.</p></body>", dict(FIXTURE_META))
    with pytest.raises(DataError, match="empty document"):
        build_graph(bare)  # no spans yet


def test_connective_classes_condition_condition_disjunction():
    html = ("<body><p>If you qualify, submit the claim. "
            "You may enroll unless the deadline passed. "
            "Pay the fee or bring a waiver.</p></body>")
    doc = _doc(html)
    g = build_labeled_graph(doc)
    discourse = [(e.src, e.dst, e.kind) for e in g.edges if e.kind not in ("child", "sibling")]
    texts = {s.id_sp: doc.text[s.start:s.end] for s in doc.spans}
    kinds = [k for _, _, k in discourse]
    assert sorted(kinds) == ["condition", "condition", "disjunction"]
    for src, dst, kind in discourse:
        if kind == "disjunction":
            assert texts[src].startswith("or")
        assert g.nodes[src].role == "precondition"
        assert g.nodes[dst].role == "solution"


def test_condition_edge_endpoints_roles(fixture_graph):
    for e in fixture_graph.edges:
        if e.kind == "condition":
            assert fixture_graph.nodes[e.src].role == "precondition"
            assert fixture_graph.nodes[e.dst].role == "solution"


def test_child_edges_form_forest(fixture_graph):
    parents: dict[str, str] = {}
    for e in fixture_graph.edges:
        if e.kind == "child":
            assert e.dst not in parents, f"{e.dst} has two parents"
            parents[e.dst] = e.src
    for node in parents:
        seen = set()
        cur = node
        while cur in parents:
            assert cur not in seen, "cycle in child edges"
            seen.add(cur)
            cur = parents[cur]


def test_conditions_for_direct(fixture_graph):
    assert conditions_for(fixture_graph, "d1-sp3") == ["d1-sp2"]
    assert conditions_for(fixture_graph, "d1-sp9") == []
    assert solutions_for(fixture_graph, "d1-sp6") == ["d1-sp5"]


def test_conditions_for_inherited_via_list_introducer():
    """Hand traversal: item -> introducer main clause (child edge), which is
    the target of the if-clause; the item inherits that condition."""
    html = ("<body><h2>Options</h2>"
            "<p>If you served on active duty, you may choose one of these:</p>"
            "<ul><li>Apply online</li><li>Call the office</li></ul></body>")
    doc = _doc(html)
    g = build_labeled_graph(doc)
    texts = {doc.text[s.start:s.end]: s.id_sp for s in doc.spans}
    cond = texts["If you served on active duty,"]
    item = texts["Apply online"]
    main = texts["you may choose one of these:"]
    assert conditions_for(g, main) == [cond]
    assert conditions_for(g, item) == [cond]  # inherited one level up
    assert item in solutions_for(g, cond)
    assert main in solutions_for(g, cond)


def test_no_span_is_its_own_condition(fixture_graph):
    for sid in fixture_graph.nodes:
        assert sid not in conditions_for(fixture_graph, sid)


def test_unknown_span_rejected(fixture_graph):
    with pytest.raises(DataError):
        conditions_for(fixture_graph, "nope")
    with pytest.raises(DataError):
        solutions_for(fixture_graph, "nope")


def test_build_deterministic_and_idempotent(fixture_doc):
    g1 = build_labeled_graph(fixture_doc)
    g2 = build_labeled_graph(fixture_doc)
    assert g1.to_dict() == g2.to_dict()
    # relabeling an already labeled graph adds nothing
    relabeled = label_condition_edges(g1, fixture_doc)
    assert relabeled.to_dict() == g2.to_dict()


def test_graph_export_round_trip(fixture_graph):
    d = fixture_graph.to_dict()
    assert SpanGraph.from_dict(d).to_dict() == d


def test_self_loop_rejected():
    g = SpanGraph(doc_id="x")
    from dialogcraft.graph import SpanNode

    g.nodes["a"] = SpanNode("a", "solution")
    with pytest.raises(DataError):
        g.add_edge("a", "a", "condition")
