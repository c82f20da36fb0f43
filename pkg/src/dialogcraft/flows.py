"""Generate seeded dialogue flows from a labeled span graph.

A flow alternates user/agent scenes starting with the user.  Each
sub-dialogue opens with a user query on a solution (or, for under-specified
openings, on a title above it), verifies the solution's outstanding
preconditions through agent question / user yes-no pairs, and closes with an
agent reply.  The candidate pool tracks span statuses so established spans
are never reselected and a "no" answer retires the dependent branch.
"""
from __future__ import annotations

import hashlib
import random
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

from .graph import SpanGraph, conditions_for
from .models import (
    AGENT,
    ROLE_PRECONDITION,
    ROLE_SOLUTION,
    ROLE_TITLE,
    STATUS_ESTABLISHED,
    STATUS_EXCLUDED,
    STATUS_FRESH,
    STATUS_SELECTED,
    USER,
    DataError,
    DialogueAct,
    DialogueFlow,
    DialogueScene,
    Document,
)


@dataclass
class GenConfig:
    seed: int = 0
    min_turns: int = 10
    max_turns: int = 18
    target_turns: int = 14
    flows_per_doc: int = 10
    p_underspecified: float = 0.3
    p_yes: float = 0.7

    def __post_init__(self) -> None:
        if not (self.min_turns <= self.target_turns <= self.max_turns):
            raise DataError("need min_turns <= target_turns <= max_turns")
        if not (0.0 <= self.p_underspecified <= 1.0):
            raise DataError("p_underspecified must be in [0,1]")


@dataclass
class CandidatePool:
    """Selection state for one generation session over one graph."""

    graph: SpanGraph
    statuses: dict[str, str] = field(default_factory=dict)
    entry_points: list[str] = field(default_factory=list)
    active_solution: Optional[str] = None

    def fresh_solutions(self) -> list[str]:
        return [
            sid
            for sid, status in self.statuses.items()
            if status == STATUS_FRESH and self.graph.nodes[sid].role == ROLE_SOLUTION
        ]

    def open_conditions(self, solution_id: str) -> list[str]:
        """Preconditions of a solution not yet established."""
        return [
            c
            for c in conditions_for(self.graph, solution_id)
            if self.statuses.get(c) != STATUS_ESTABLISHED
        ]

    def subdialogue_cost(self, solution_id: str) -> int:
        return 2 + 2 * len(self.open_conditions(solution_id))

    def first_fresh_under(self, title_id: str) -> Optional[str]:
        """First fresh solution (document order) in the title's child subtree."""
        for sid in self.fresh_solutions():
            node = self.graph.child_parent(sid)
            while node is not None:
                if node == title_id:
                    return sid
                node = self.graph.child_parent(node)
        return None


def init_pool(graph: SpanGraph) -> CandidatePool:
    """All precondition and solution spans start fresh; titles are entry points."""
    pool = CandidatePool(graph=graph)
    for sid, node in graph.nodes.items():
        if node.role in (ROLE_SOLUTION, ROLE_PRECONDITION):
            pool.statuses[sid] = STATUS_FRESH
        if node.role == ROLE_TITLE:
            pool.entry_points.append(sid)
    if not any(graph.nodes[sid].role == ROLE_SOLUTION for sid in pool.statuses):
        raise DataError(f"{graph.doc_id}: ungeneratable document")
    return pool


def next_scene(
    pool: CandidatePool,
    graph: SpanGraph,
    history: list[DialogueScene],
    rng: random.Random,
    config: Optional[GenConfig] = None,
) -> Optional[DialogueScene]:
    """Produce the next scene under the sequencing rules, or None when the
    pool offers no opening that fits within max_turns (flow-complete)."""
    config = config or GenConfig()
    last = history[-1] if history else None

    if last is None or last.da == DialogueAct.AGENT_REPLY:
        budget = config.max_turns - len(history)
        eligible = [s for s in pool.fresh_solutions() if pool.subdialogue_cost(s) <= budget]
        if not eligible:
            return None
        if rng.random() < config.p_underspecified:
            titles = [
                t
                for t in pool.entry_points
                if (s := pool.first_fresh_under(t)) is not None
                and pool.subdialogue_cost(s) <= budget
            ]
            if titles:
                return DialogueScene(USER, DialogueAct.USER_QUERY, [rng.choice(titles)])
        return DialogueScene(USER, DialogueAct.USER_QUERY, [rng.choice(eligible)])

    if last.da == DialogueAct.AGENT_QUERY:
        outcome = "yes" if rng.random() < config.p_yes else "no"
        return DialogueScene(
            USER, DialogueAct.USER_YESNO, list(last.grounding_sp_ids), yesno_outcome=outcome
        )

    # agent turn: verify an open condition or reply on the active solution
    active = pool.active_solution
    if active is None:
        raise DataError("no active solution; pool not updated with the opening scene")
    if last.da == DialogueAct.USER_YESNO and last.yesno_outcome == "no":
        return DialogueScene(AGENT, DialogueAct.AGENT_REPLY, [active])
    open_conds = pool.open_conditions(active)
    if open_conds:
        return DialogueScene(AGENT, DialogueAct.AGENT_QUERY, [rng.choice(open_conds)])
    return DialogueScene(AGENT, DialogueAct.AGENT_REPLY, [active])


def update_pool(
    pool: CandidatePool, scene: DialogueScene, outcome: Optional[str] = None
) -> CandidatePool:
    """Fold a just-emitted scene into the pool state.

    Established spans never return to the candidate set; a "no" outcome
    excludes the queried condition and every dependent solution branch.
    """
    outcome = outcome if outcome is not None else scene.yesno_outcome
    graph = pool.graph
    sid = scene.grounding_sp_ids[0]

    if scene.da == DialogueAct.USER_QUERY:
        if graph.nodes[sid].role == ROLE_TITLE:
            chosen = pool.first_fresh_under(sid)
            if chosen is None:
                raise DataError(f"no fresh solution under entry point {sid}")
        else:
            chosen = sid
        pool.statuses[chosen] = STATUS_SELECTED
        pool.active_solution = chosen
    elif scene.da == DialogueAct.AGENT_QUERY:
        pool.statuses[sid] = STATUS_SELECTED
    elif scene.da == DialogueAct.USER_YESNO:
        if outcome == "yes":
            pool.statuses[sid] = STATUS_ESTABLISHED
        else:
            pool.statuses[sid] = STATUS_EXCLUDED
            for other, status in pool.statuses.items():
                if (
                    status != STATUS_ESTABLISHED
                    and graph.nodes[other].role == ROLE_SOLUTION
                    and sid in conditions_for(graph, other)
                ):
                    pool.statuses[other] = STATUS_EXCLUDED
    elif scene.da == DialogueAct.AGENT_REPLY:
        if pool.statuses.get(sid) != STATUS_EXCLUDED:
            pool.statuses[sid] = STATUS_ESTABLISHED
        pool.active_solution = None
    return pool


def generate_flow(
    graph: SpanGraph,
    config: GenConfig,
    rng: Optional[random.Random] = None,
    flow_id: Optional[str] = None,
    seed: Optional[int] = None,
) -> DialogueFlow:
    """Run next_scene/update_pool until the target length is reached or the
    pool is exhausted.  Same seed, same graph -> identical flow."""
    seed = config.seed if seed is None else seed
    rng = rng or random.Random(seed)
    pool = init_pool(graph)
    scenes: list[DialogueScene] = []
    while True:
        closed = not scenes or scenes[-1].da == DialogueAct.AGENT_REPLY
        if closed and len(scenes) >= config.target_turns:
            break
        scene = next_scene(pool, graph, scenes, rng, config)
        if scene is None:
            break
        scenes.append(scene)
        update_pool(pool, scene)
    return DialogueFlow(
        flow_id=flow_id or f"{graph.doc_id}-flow-{seed}",
        doc_id=graph.doc_id,
        seed=seed,
        scenes=scenes,
    )


def derive_seed(master_seed: int, doc_id: str, index: int) -> int:
    """Stable per-flow 64-bit seed from the invocation seed."""
    digest = hashlib.blake2b(
        f"{master_seed}:{doc_id}:{index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def flows_for_document(doc: Document, graph: SpanGraph, config: GenConfig) -> list[DialogueFlow]:
    flows = []
    for i in range(config.flows_per_doc):
        seed = derive_seed(config.seed, doc.doc_id, i)
        flows.append(
            generate_flow(graph, config, flow_id=f"{doc.doc_id}-f{i:03d}", seed=seed)
        )
    return flows


HEATMAP_ROWS = ("token", "span", "paragraph", "section")


def coverage_heatmap(flows: list[DialogueFlow], docs: list[Document]) -> list[list[float]]:
    """4x10 percentage matrix of grounding positions.

    Rows: token / span / paragraph / section granularity; columns: position
    deciles 1-10 within the grounding document.  Each row sums to 100.
    """
    if not flows:
        raise DataError("empty flow list")
    by_id = {d.doc_id: d for d in docs}

    unit_starts: dict[str, dict[str, list[int]]] = {}
    for d in docs:
        unit_starts[d.doc_id] = {
            "token": [m.start() for m in re.finditer(r"\S+", d.text)],
            "span": [sp.start for sp in d.spans],
            "paragraph": [p.start for p in d.paragraphs],
            "section": [s.start for s in d.sections],
        }

    counts = [[0] * 10 for _ in HEATMAP_ROWS]
    for flow in flows:
        doc = by_id.get(flow.doc_id)
        if doc is None:
            raise DataError(f"{flow.flow_id}: unknown document {flow.doc_id}")
        for scene in flow.scenes:
            if scene.irrelevant_marker:
                continue
            for sp_id in scene.grounding_sp_ids:
                start = doc.span(sp_id).start
                for r, row in enumerate(HEATMAP_ROWS):
                    starts = unit_starts[doc.doc_id][row]
                    if not starts:
                        continue
                    idx = max(0, bisect_right(starts, start) - 1)
                    col = min(9, idx * 10 // len(starts))
                    counts[r][col] += 1

    matrix = []
    for row_counts in counts:
        total = sum(row_counts)
        if total == 0:
            raise DataError("no groundings to bin")
        matrix.append([100.0 * c / total for c in row_counts])
    return matrix
