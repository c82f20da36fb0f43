"""Serve dialogue scenes one turn at a time and record utterances/rejections.

Persistence is an append-only JSON-lines event log per session; replaying the
logs reconstructs identical session state after a crash or restart.  One
writer completes a whole flow in order, playing both roles.
"""
from __future__ import annotations

import json
import threading
import uuid
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .models import (
    DataError,
    DialogueAct,
    DialogueFlow,
    DialogueRecord,
    Document,
    RejectionReason,
    Turn,
)

INSTRUCTIONS = {
    DialogueAct.USER_QUERY: "Ask for help with the highlighted content, in your own words.",
    DialogueAct.AGENT_QUERY: "Ask the user whether the highlighted condition applies to them.",
    DialogueAct.AGENT_REPLY: "Reply to the user's request using the highlighted content and the chat so far.",
}
YESNO_INSTRUCTIONS = {
    "yes": "Answer the agent's question affirmatively, in natural wording of your own.",
    "no": "Answer the agent's question negatively, in natural wording of your own.",
}


class UnknownIdError(KeyError):
    pass


class ConflictError(RuntimeError):
    pass


@dataclass
class Session:
    session_id: str
    flow_id: str
    cursor: int = 0
    utterances: list[str] = field(default_factory=list)
    rejection: Optional[dict[str, Any]] = None

    @property
    def rejected(self) -> bool:
        return self.rejection is not None


class SessionStore:
    """Event-sourced session state over a directory of per-session logs."""

    def __init__(
        self,
        root: str | Path,
        flows: dict[str, DialogueFlow],
        docs: Optional[dict[str, Document]] = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.flows = flows
        self.docs = docs or {}
        self.sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._replay()

    # -- persistence ----------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict[str, Any]) -> None:
        with open(self._log_path(session_id), "a", encoding="utf-8") as f:
            f.write(json.dumps(event, ensure_ascii=False) + "\n")
            f.flush()

    def _replay(self) -> None:
        for path in sorted(self.root.glob("*.jsonl")):
            with open(path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        self._apply(json.loads(line))

    def _apply(self, event: dict[str, Any]) -> None:
        kind = event["event"]
        if kind == "created":
            s = Session(session_id=event["session_id"], flow_id=event["flow_id"])
            self.sessions[s.session_id] = s
            self._session_locks[s.session_id] = threading.Lock()
        elif kind == "utterance":
            s = self.sessions[event["session_id"]]
            s.utterances.append(event["text"])
            s.cursor += 1
        elif kind == "rejected":
            s = self.sessions[event["session_id"]]
            s.rejection = {"turn_index": event["turn_index"], "reason": event["reason"]}
        else:
            raise DataError(f"unknown event type {kind!r}")

    # -- operations ------------------------------------------------------

    def create_session(self, flow_id: str) -> Session:
        with self._store_lock:
            if flow_id not in self.flows:
                raise UnknownIdError(f"unknown flow {flow_id!r}")
            if any(s.flow_id == flow_id for s in self.sessions.values()):
                raise ConflictError(f"flow {flow_id!r} already claimed")
            session_id = uuid.uuid4().hex[:12]
            event = {"event": "created", "session_id": session_id, "flow_id": flow_id}
            self._append(session_id, event)
            self._apply(event)
            return self.sessions[session_id]

    def _session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownIdError(f"unknown session {session_id!r}") from None

    def _flow(self, session: Session) -> DialogueFlow:
        return self.flows[session.flow_id]

    def outstanding(self, session: Session) -> bool:
        return not session.rejected and session.cursor < len(self._flow(session).scenes)

    def get_scene(self, session_id: str) -> dict[str, Any]:
        session = self._session(session_id)
        flow = self._flow(session)
        if not self.outstanding(session):
            return {
                "done": True,
                "session_id": session_id,
                "rejected": session.rejected,
                "turns_written": session.cursor,
            }
        scene = flow.scenes[session.cursor]
        if scene.da == DialogueAct.USER_YESNO:
            instruction = YESNO_INSTRUCTIONS[scene.yesno_outcome or "yes"]
        else:
            instruction = INSTRUCTIONS[scene.da]

        doc = self.docs.get(flow.doc_id)
        grounding = []
        excerpt = None
        for sp_id in scene.grounding_sp_ids:
            text = doc.span_text(sp_id) if doc else ""
            grounding.append({"sp_id": sp_id, "text": text})
        if doc and scene.grounding_sp_ids:
            sp = doc.span(scene.grounding_sp_ids[0])
            lo, hi = sp.start, sp.end
            for p in doc.paragraphs:
                if p.start <= sp.start and sp.end <= p.end:
                    lo, hi = p.start, p.end
                    break
            excerpt = {
                "doc_id": doc.doc_id,
                "text": doc.text[lo:hi],
                "highlight": [sp.start - lo, sp.end - lo],
            }

        history = [
            {
                "turn_id": i + 1,
                "role": flow.scenes[i].role,
                "da": flow.scenes[i].da.value,
                "utterance": session.utterances[i],
            }
            for i in range(session.cursor)
        ]
        return {
            "done": False,
            "session_id": session_id,
            "flow_id": flow.flow_id,
            "turn_id": session.cursor + 1,
            "total_turns": len(flow.scenes),
            "scene": {
                "role": scene.role,
                "da": scene.da.value,
                "grounding_sp_ids": list(scene.grounding_sp_ids),
                "yesno_outcome": scene.yesno_outcome,
                "instruction": instruction,
            },
            "grounding": grounding,
            "document_excerpt": excerpt,
            "history": history,
        }

    def submit_utterance(self, session_id: str, text: str) -> dict[str, Any]:
        if not text or not text.strip():
            raise DataError("utterance text must be non-empty")
        session = self._session(session_id)
        with self._session_locks[session_id]:
            if not self.outstanding(session):
                raise ConflictError("no outstanding scene")
            event = {
                "event": "utterance",
                "session_id": session_id,
                "turn_index": session.cursor,
                "text": text,
            }
            self._append(session_id, event)
            self._apply(event)
            return {"ok": True, "turn_id": session.cursor, "done": not self.outstanding(session)}

    def reject_scene(self, session_id: str, reason: str) -> dict[str, Any]:
        parsed = RejectionReason.parse(reason)  # DataError-alike on bad input
        session = self._session(session_id)
        with self._session_locks[session_id]:
            if not self.outstanding(session):
                raise ConflictError("no outstanding scene")
            event = {
                "event": "rejected",
                "session_id": session_id,
                "turn_index": session.cursor,
                "reason": parsed.value,
            }
            self._append(session_id, event)
            self._apply(event)
            return {"ok": True, "rejected_turn": session.cursor + 1, "reason": parsed.value}

    # -- export / reporting ----------------------------------------------

    def export_dialogues(self) -> list[DialogueRecord]:
        """Completed dialogues plus excised partials from rejected sessions.

        Every turn carries the scene annotation verbatim; the export is a
        pure function of the store state, hence idempotent.
        """
        records = []
        for session in sorted(self.sessions.values(), key=lambda s: s.flow_id):
            flow = self._flow(session)
            if not session.rejected and session.cursor < len(flow.scenes):
                continue  # in progress
            n_turns = session.cursor
            if n_turns < 2:
                continue
            doc = self.docs.get(flow.doc_id)
            turns = [
                Turn(
                    turn_id=i + 1,
                    role=flow.scenes[i].role,
                    da=flow.scenes[i].da,
                    grounding_sp_ids=list(flow.scenes[i].grounding_sp_ids),
                    doc_id=flow.doc_id,
                    utterance=session.utterances[i],
                    irrelevant_marker=flow.scenes[i].irrelevant_marker,
                )
                for i in range(n_turns)
            ]
            records.append(
                DialogueRecord(
                    dial_id=flow.flow_id,
                    doc_ids=[flow.doc_id],
                    domain=doc.domain if doc else "",
                    turns=turns,
                )
            )
        return records

    def rejection_report(self) -> dict[str, Any]:
        """Fraction of rejected turns and the reason distribution."""
        processed = 0
        reasons: Counter = Counter()
        for session in self.sessions.values():
            processed += session.cursor
            if session.rejected:
                processed += 1
                reasons[session.rejection["reason"]] += 1
        rejected = sum(reasons.values())
        rows = [
            {
                "reason": RejectionReason(slug).label,
                "count": count,
                "pct": 100.0 * count / rejected if rejected else 0.0,
            }
            for slug, count in reasons.most_common()
        ]
        return {
            "turns_processed": processed,
            "turns_rejected": rejected,
            "rejected_fraction": rejected / processed if processed else 0.0,
            "reasons": rows,
        }


class CreateSessionBody(BaseModel):
    flow_id: str


class UtteranceBody(BaseModel):
    text: str


class RejectBody(BaseModel):
    reason: str


def create_app(store: SessionStore):
    """FastAPI app exposing the annotation endpoints."""
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="dialogcraft annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = store

    def guard(fn, *args):
        try:
            return fn(*args)
        except UnknownIdError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except (DataError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        session = guard(store.create_session, body.flow_id)
        flow = store.flows[session.flow_id]
        return {
            "session_id": session.session_id,
            "flow_id": session.flow_id,
            "total_turns": len(flow.scenes),
        }

    @app.get("/sessions/{session_id}/scene")
    def get_scene(session_id: str):
        return guard(store.get_scene, session_id)

    @app.post("/sessions/{session_id}/utterance")
    def submit_utterance(session_id: str, body: UtteranceBody):
        return guard(store.submit_utterance, session_id, body.text)

    @app.post("/sessions/{session_id}/reject")
    def reject_scene(session_id: str, body: RejectBody):
        return guard(store.reject_scene, session_id, body.reason)

    @app.get("/export", response_class=PlainTextResponse)
    def export():
        records = store.export_dialogues()
        return "\n".join(json.dumps(r.to_dict(), ensure_ascii=False) for r in records) + (
            "\n" if records else ""
        )

    @app.get("/report")
    def report():
        return store.rejection_report()

    return app
