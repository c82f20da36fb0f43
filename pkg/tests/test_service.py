import json
import random

import pytest
from fastapi.testclient import TestClient

from dialogcraft.flows import GenConfig, flows_for_document
from dialogcraft.graph import build_labeled_graph
from dialogcraft.models import RejectionReason
from dialogcraft.service import SessionStore, create_app

REASON_SENTENCES = [
    "The selected-text is not a contextual condition.",
    "The selected-text is not a solution to the query.",
    "Cannot write a turn to be coherent with the chat history.",
    "There is not enough information in the selected (or adjacent) text.",
    "The selected-text is not Comprehensible.",
    "Other.",
]


@pytest.fixture
def store(tmp_path, flow_corpus):
    docs = {d.doc_id: d for d in flow_corpus[:4]}
    flows = {}
    for doc in docs.values():
        g = build_labeled_graph(doc)
        for f in flows_for_document(doc, g, GenConfig(seed=5, flows_per_doc=3)):
            flows[f.flow_id] = f
    return SessionStore(tmp_path / "store", flows, docs)


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


def _walk_through(client, session_id, prefix="w", stop_after=None):
    written = 0
    while True:
        scene = client.get(f"/sessions/{session_id}/scene").json()
        if scene["done"]:
            return written
        client.post(
            f"/sessions/{session_id}/utterance",
            json={"text": f"{prefix} {scene['turn_id']}"},
        ).raise_for_status()
        written += 1
        if stop_after and written >= stop_after:
            return written


def test_create_session_and_claim_conflict(client, store):
    flow_id = next(iter(store.flows))
    r = client.post("/sessions", json={"flow_id": flow_id})
    assert r.status_code == 200
    assert r.json()["flow_id"] == flow_id
    assert client.post("/sessions", json={"flow_id": flow_id}).status_code == 409
    assert client.post("/sessions", json={"flow_id": "missing"}).status_code == 404


def test_scene_payload_matches_flow(client, store):
    flow_id = next(iter(store.flows))
    flow = store.flows[flow_id]
    sid = client.post("/sessions", json={"flow_id": flow_id}).json()["session_id"]
    scene = client.get(f"/sessions/{sid}/scene").json()
    first = flow.scenes[0]
    assert scene["scene"]["role"] == first.role
    assert scene["scene"]["da"] == first.da.value
    assert scene["scene"]["grounding_sp_ids"] == first.grounding_sp_ids
    assert scene["scene"]["instruction"]
    assert scene["history"] == []
    excerpt = scene["document_excerpt"]
    doc = store.docs[flow.doc_id]
    lo, hi = excerpt["highlight"]
    assert excerpt["text"][lo:hi] == doc.span_text(first.grounding_sp_ids[0])


def test_full_walkthrough_exports_annotated_dialogue(client, store):
    flow_id = sorted(store.flows)[0]
    flow = store.flows[flow_id]
    sid = client.post("/sessions", json={"flow_id": flow_id}).json()["session_id"]
    written = _walk_through(client, sid)
    assert written == len(flow.scenes)

    lines = [l for l in client.get("/export").text.splitlines() if l]
    record = json.loads(lines[0])
    assert record["dial_id"] == flow_id
    assert len(record["turns"]) == len(flow.scenes)
    for turn, scene in zip(record["turns"], flow.scenes):
        assert turn["role"] == scene.role
        assert turn["da"] == scene.da.value
        assert turn["grounding_sp_ids"] == scene.grounding_sp_ids


def test_yesno_scene_carries_outcome_directive(client, store):
    for flow_id in sorted(store.flows):
        flow = store.flows[flow_id]
        idx = next(
            (i for i, s in enumerate(flow.scenes) if s.da.value == "user_respond_yesno"),
            None,
        )
        if idx is None:
            continue
        sid = client.post("/sessions", json={"flow_id": flow_id}).json()["session_id"]
        for _ in range(idx):
            scene = client.get(f"/sessions/{sid}/scene").json()
            client.post(f"/sessions/{sid}/utterance", json={"text": "x"})
        scene = client.get(f"/sessions/{sid}/scene").json()
        assert scene["scene"]["yesno_outcome"] in ("yes", "no")
        assert scene["scene"]["instruction"]
        return
    pytest.fail("no yes/no scene found in fixture flows")


def test_submit_and_reject_error_paths(client, store):
    flow_id = sorted(store.flows)[1]
    sid = client.post("/sessions", json={"flow_id": flow_id}).json()["session_id"]
    assert client.post(f"/sessions/{sid}/utterance", json={"text": "  "}).status_code == 400
    assert client.post(f"/sessions/{sid}/reject", json={"reason": "nonsense"}).status_code == 400
    assert client.get("/sessions/nope/scene").status_code == 404
    _walk_through(client, sid)
    assert client.post(f"/sessions/{sid}/utterance", json={"text": "extra"}).status_code == 409
    assert (
        client.post(f"/sessions/{sid}/reject", json={"reason": REASON_SENTENCES[0]}).status_code
        == 409
    )


def test_rejection_terminates_session(client, store):
    flow_id = sorted(store.flows)[2]
    sid = client.post("/sessions", json={"flow_id": flow_id}).json()["session_id"]
    _walk_through(client, sid, stop_after=3)
    r = client.post(f"/sessions/{sid}/reject", json={"reason": REASON_SENTENCES[0]})
    assert r.status_code == 200
    scene = client.get(f"/sessions/{sid}/scene").json()
    assert scene["done"] is True and scene["rejected"] is True
    # partial with >= 2 turns is exported after excision
    lines = [json.loads(l) for l in client.get("/export").text.splitlines() if l]
    exported = {r["dial_id"]: r for r in lines}
    assert len(exported[flow_id]["turns"]) == 3


def test_all_six_reasons_accepted_as_slug_or_sentence():
    for reason in RejectionReason:
        assert RejectionReason.parse(reason.value) is reason
        assert RejectionReason.parse(reason.label) is reason
    assert [r.label for r in RejectionReason] == REASON_SENTENCES
    with pytest.raises(ValueError):
        RejectionReason.parse("whatever")


def test_export_idempotent(client, store):
    flow_id = sorted(store.flows)[0]
    sid = client.post("/sessions", json={"flow_id": flow_id}).json()["session_id"]
    _walk_through(client, sid)
    assert client.get("/export").text == client.get("/export").text


def test_crash_restart_replays_identical_state(tmp_path, flow_corpus):
    docs = {d.doc_id: d for d in flow_corpus[:6]}
    flows = {}
    for doc in docs.values():
        g = build_labeled_graph(doc)
        for f in flows_for_document(doc, g, GenConfig(seed=2, flows_per_doc=10)):
            flows[f.flow_id] = f

    root = tmp_path / "events"
    store = SessionStore(root, flows, docs)
    rng = random.Random(5)
    flow_ids = sorted(flows)[:50]
    for i, flow_id in enumerate(flow_ids):
        session = store.create_session(flow_id)
        n_scenes = len(flows[flow_id].scenes)
        mode = i % 3
        steps = n_scenes if mode == 0 else rng.randint(1, n_scenes - 1)
        for k in range(steps):
            store.submit_utterance(session.session_id, f"utterance {k}")
        if mode == 2:
            store.reject_scene(session.session_id, rng.choice(REASON_SENTENCES))

    restored = SessionStore(root, flows, docs)
    assert sorted(restored.sessions) == sorted(store.sessions)
    for sid, session in store.sessions.items():
        twin = restored.sessions[sid]
        assert twin.flow_id == session.flow_id
        assert twin.cursor == session.cursor
        assert twin.utterances == session.utterances
        assert twin.rejection == session.rejection
    # exports agree too
    a = [r.to_dict() for r in store.export_dialogues()]
    b = [r.to_dict() for r in restored.export_dialogues()]
    assert a == b


def test_concurrent_sessions_do_not_interfere(tmp_path, flow_corpus):
    """Parallel writers on distinct sessions: per-session logs stay intact and
    replay reproduces every session."""
    import threading

    docs = {d.doc_id: d for d in flow_corpus[:4]}
    flows = {}
    for doc in docs.values():
        g = build_labeled_graph(doc)
        for f in flows_for_document(doc, g, GenConfig(seed=8, flows_per_doc=4)):
            flows[f.flow_id] = f
    store = SessionStore(tmp_path / "s", flows, docs)
    session_ids = [store.create_session(fid).session_id for fid in sorted(flows)[:8]]

    def writer(sid: str) -> None:
        while store.outstanding(store.sessions[sid]):
            store.submit_utterance(sid, f"{sid} line")

    threads = [threading.Thread(target=writer, args=(sid,)) for sid in session_ids]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    for sid in session_ids:
        session = store.sessions[sid]
        assert session.cursor == len(flows[session.flow_id].scenes)
    restored = SessionStore(tmp_path / "s", flows, docs)
    assert {s: restored.sessions[s].utterances for s in session_ids} == {
        s: store.sessions[s].utterances for s in session_ids
    }


def test_rejection_report_table_shape(tmp_path, flow_corpus):
    docs = {d.doc_id: d for d in flow_corpus[:2]}
    flows = {}
    for doc in docs.values():
        g = build_labeled_graph(doc)
        for f in flows_for_document(doc, g, GenConfig(seed=3, flows_per_doc=6)):
            flows[f.flow_id] = f
    store = SessionStore(tmp_path / "s", flows, docs)

    reasons = [REASON_SENTENCES[0]] * 3 + [REASON_SENTENCES[2]] * 1
    flow_ids = sorted(flows)
    for i, flow_id in enumerate(flow_ids[:8]):
        session = store.create_session(flow_id)
        for k in range(4):
            store.submit_utterance(session.session_id, f"u{k}")
        if i < len(reasons):
            store.reject_scene(session.session_id, reasons[i])

    report = store.rejection_report()
    assert report["turns_processed"] == 8 * 4 + 4
    assert report["turns_rejected"] == 4
    assert abs(report["rejected_fraction"] - 4 / 36) < 1e-12
    assert [row["reason"] for row in report["reasons"]] == [REASON_SENTENCES[0], REASON_SENTENCES[2]]
    assert abs(report["reasons"][0]["pct"] - 75.0) < 1e-12
    assert abs(report["reasons"][1]["pct"] - 25.0) < 1e-12
    for row in report["reasons"]:
        assert set(row) == {"reason", "count", "pct"}
