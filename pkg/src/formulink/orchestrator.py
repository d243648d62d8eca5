"""Staged designer dialogue: retrieve, prompt, reply, advance.

One session walks REQUIREMENTS -> SCENARIO -> OBJECTIVE ->
[CONSTRAINT_GATHERING...] -> FORMULATE -> DONE, with FAILED reachable from
any working stage (context oversize, knowledge-base ingest failure, or the
ten-round cap). Every round retrieves k chunks (REQUIREMENTS retrieves
nothing), assembles a budgeted prompt, and applies the stage's advance rule
to the reply. The constraint-gathering stage loops until every needed
knowledge unit is covered, which is what ties round counts to the knowledge
base's chunk size and k.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ContextOversize, MalformedReply, MaxRoundsExceeded, SessionClosed
from .formulation import CONSTRAINT_KIND_CATALOG, parse_formulation
from .gateway import ModelProfile, PromptBundle, complete
from .knowledge import KnowledgeIndex, retrieve
from .memory import DIGEST_BUDGET_TOKENS, MemoryRecord, SessionMemory

MAX_ROUNDS = 10

STAGE_REQUIREMENTS = "REQUIREMENTS"
STAGE_SCENARIO = "SCENARIO"
STAGE_OBJECTIVE = "OBJECTIVE"
STAGE_GATHERING = "CONSTRAINT_GATHERING"
STAGE_FORMULATE = "FORMULATE"
STAGE_DONE = "DONE"
STAGE_FAILED = "FAILED"

WORKING_STAGES = (STAGE_REQUIREMENTS, STAGE_SCENARIO, STAGE_OBJECTIVE,
                  STAGE_GATHERING, STAGE_FORMULATE)
STAGE_ORDER = {s: i for i, s in enumerate(WORKING_STAGES + (STAGE_DONE,))}

FAILURE_MAX_ROUNDS = "max_rounds"
FAILURE_CONTEXT_OVERSIZE = "context_oversize"
FAILURE_INGEST = "ingest_error"

SESSION_FORMAT_VERSION = 1

_SYSTEM_TEXTS = {
    STAGE_REQUIREMENTS: (
        "You help a network designer turn a scenario into a formal optimization problem. "
        "Reason step by step and start every reply with one line 'THOUGHT: ...'. "
        "Ask the designer for whatever is needed to pin the problem down."
    ),
    STAGE_SCENARIO: (
        "You help a network designer formalize their scenario. Reason step by step; start "
        "with a 'THOUGHT: ...' line. Use the retrieved library excerpts. Report topics you "
        "could ground this round on a 'COLLECTED: ...' line and open ones on 'MISSING: ...'."
    ),
    STAGE_OBJECTIVE: (
        "Confirm the designer's optimization objective and keep grounding constraint topics "
        "from the retrieved excerpts. Reason step by step; start with 'THOUGHT: ...'; report "
        "'COLLECTED: ...' and 'MISSING: ...' lines."
    ),
    STAGE_GATHERING: (
        "Close the remaining constraint topics using the retrieved excerpts. Reason step by "
        "step; start with 'THOUGHT: ...'; report newly grounded topics on 'COLLECTED: ...' "
        "and open ones on 'MISSING: ...'."
    ),
    STAGE_FORMULATE: (
        "All topics are grounded. Reason step by step; start with 'THOUGHT: ...'. Emit the "
        "final problem as exactly one block between BEGIN_FORMULATION and END_FORMULATION "
        "using the VAR / MAX / S.T. record grammar."
    ),
}


@dataclass(frozen=True)
class IngestFailure:
    """Placeholder for a knowledge base whose build failed."""
    error: str


@dataclass
class SessionState:
    session_id: str
    profile: ModelProfile
    index: KnowledgeIndex | IngestFailure | None
    k: int
    stage: str = STAGE_REQUIREMENTS
    round: int = 0
    memory: SessionMemory = field(default_factory=SessionMemory)
    facts_needed: frozenset[str] = frozenset(CONSTRAINT_KIND_CATALOG)
    facts_collected: set[str] = field(default_factory=set)
    transcript: list[tuple[str, str]] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    failure_reason: str | None = None
    vocabulary: dict[str, str] = field(default_factory=dict)
    world: Any = None            # opaque payload for scripted backends
    index_key: str = ""

    @property
    def terminal(self) -> bool:
        return self.stage in (STAGE_DONE, STAGE_FAILED)

    def missing_kinds(self) -> list[str]:
        return [k for k in CONSTRAINT_KIND_CATALOG
                if k in self.facts_needed and k not in self.facts_collected]

    def collected_kinds(self) -> list[str]:
        return [k for k in CONSTRAINT_KIND_CATALOG if k in self.facts_collected]


@dataclass(frozen=True)
class StageTemplate:
    stage: str
    system_text: str
    query_builder: Callable[[SessionState], str | None]
    advance_rule: Callable[[SessionState, str], str]


def _terms_for(state: SessionState, kinds: list[str]) -> str:
    vocab = state.vocabulary
    return " ".join(vocab.get(k, k.replace("_", " ")) for k in kinds)


def _query_missing(state: SessionState) -> str:
    missing = state.missing_kinds()
    return _terms_for(state, missing if missing else state.collected_kinds())


def _query_collected(state: SessionState) -> str:
    collected = state.collected_kinds()
    return _terms_for(state, collected if collected else state.missing_kinds())


def _advance_after_objective(state: SessionState, reply: str) -> str:
    return STAGE_FORMULATE if not state.missing_kinds() else STAGE_GATHERING


def _advance_after_formulate(state: SessionState, reply: str) -> str:
    parse_formulation(reply)   # DONE requires exactly one parseable block
    return STAGE_DONE


def default_templates() -> dict[str, StageTemplate]:
    return {
        STAGE_REQUIREMENTS: StageTemplate(
            STAGE_REQUIREMENTS, _SYSTEM_TEXTS[STAGE_REQUIREMENTS],
            lambda state: None,
            lambda state, reply: STAGE_SCENARIO),
        STAGE_SCENARIO: StageTemplate(
            STAGE_SCENARIO, _SYSTEM_TEXTS[STAGE_SCENARIO],
            _query_missing,
            lambda state, reply: STAGE_OBJECTIVE),
        STAGE_OBJECTIVE: StageTemplate(
            STAGE_OBJECTIVE, _SYSTEM_TEXTS[STAGE_OBJECTIVE],
            _query_missing,
            _advance_after_objective),
        STAGE_GATHERING: StageTemplate(
            STAGE_GATHERING, _SYSTEM_TEXTS[STAGE_GATHERING],
            _query_missing,
            _advance_after_objective),
        STAGE_FORMULATE: StageTemplate(
            STAGE_FORMULATE, _SYSTEM_TEXTS[STAGE_FORMULATE],
            _query_collected,
            _advance_after_formulate),
    }


_TEMPLATES = default_templates()


def start_session(profile: ModelProfile, index: KnowledgeIndex | IngestFailure | None,
                  k: int, *, vocabulary: dict[str, str] | None = None,
                  world: Any = None,
                  facts_needed: frozenset[str] | None = None,
                  session_id: str | None = None,
                  index_key: str = "") -> SessionState:
    if k < 1:
        raise ValueError("k must be >= 1")
    return SessionState(
        session_id=session_id or uuid.uuid4().hex[:12],
        profile=profile,
        index=index,
        k=k,
        vocabulary=vocabulary or {},
        world=world,
        facts_needed=(facts_needed if facts_needed is not None
                      else frozenset(CONSTRAINT_KIND_CATALOG)),
        index_key=index_key,
    )


def _parse_collected(reply: str) -> list[str]:
    for line in reply.splitlines():
        if line.startswith("COLLECTED:"):
            items = [s.strip() for s in line[len("COLLECTED:"):].split(",")]
            return [s for s in items if s and s != "none"]
    return []


def _parse_thought(reply: str) -> str:
    first = reply.split("\n", 1)[0]
    return first[len("THOUGHT:"):].strip() if first.startswith("THOUGHT:") else ""


def advance(state: SessionState, user_message: str) -> tuple[str, SessionState, dict]:
    """Run one dialogue round. Mutates and returns the session state.

    Context oversize and ingest failures mark the session FAILED rather than
    raising; calling into a terminal session raises SessionClosed.
    """
    if state.terminal:
        raise SessionClosed(f"session {state.session_id} is {state.stage}")
    if state.index is None or isinstance(state.index, IngestFailure):
        state.stage = STAGE_FAILED
        state.failure_reason = FAILURE_INGEST
        detail = state.index.error if isinstance(state.index, IngestFailure) else "no index"
        entry = {"round": state.round, "stage": state.stage, "query": None,
                 "retrieved": [], "prompt_tokens": 0, "reply": "", "error": detail}
        state.trace.append(entry)
        return "", state, entry
    if state.round >= MAX_ROUNDS:
        raise MaxRoundsExceeded(f"session already at round {state.round}")

    template = _TEMPLATES[state.stage]
    stage = state.stage
    query = template.query_builder(state)
    retrieved = retrieve(state.index, query, state.k) if query is not None else []
    chunks = [c for c, _ in retrieved]

    bundle = PromptBundle(
        system_text=template.system_text,
        memory_digest=state.memory.digest(DIGEST_BUDGET_TOKENS),
        retrieved=tuple((c.label, c.text) for c in chunks),
        user_turn=user_message,
    )
    script_context = {
        "stage": stage,
        "retrieved": chunks,
        "world": state.world,
        "collected": state.collected_kinds(),
        "missing": state.missing_kinds(),
    }
    state.transcript.append(("designer", user_message))
    try:
        completion = complete(bundle, state.profile, script_context)
    except ContextOversize as exc:
        state.round += 1
        state.stage = STAGE_FAILED
        state.failure_reason = FAILURE_CONTEXT_OVERSIZE
        entry = {"round": state.round, "stage": stage, "query": query,
                 "retrieved": [], "prompt_tokens": exc.token_count, "reply": "",
                 "error": f"context oversize: {exc.token_count} > {exc.budget}",
                 "budget": exc.budget}
        state.trace.append(entry)
        return "", state, entry

    reply = completion.text
    state.transcript.append(("agent", reply))
    state.memory.append(MemoryRecord(
        round=state.round + 1,
        observation=user_message,
        thought=_parse_thought(reply),
        action=reply,
        stage=stage,
    ))
    newly = [k for k in _parse_collected(reply) if k in state.facts_needed]
    state.facts_collected.update(newly)

    state.round += 1
    state.stage = template.advance_rule(state, reply)
    if not state.terminal and state.round >= MAX_ROUNDS:
        state.stage = STAGE_FAILED
        state.failure_reason = FAILURE_MAX_ROUNDS

    entry = {
        "round": state.round,
        "stage": stage,
        "query": query,
        "retrieved": [
            {"doc": c.doc_id, "chunk": c.index, "score": score}
            for c, score in retrieved
        ],
        "prompt_tokens": completion.prompt_tokens,
        "reply": reply,
    }
    state.trace.append(entry)
    return reply, state, entry


@dataclass(frozen=True)
class AutoOutcome:
    status: str                       # "done" | "failed"
    rounds: int
    failure_reason: str | None
    formulation_text: str | None
    kinds_collected: int
    state: SessionState


def run_auto(profile: ModelProfile, index: KnowledgeIndex | IngestFailure | None,
             k: int, designer: Callable[[SessionState], str], *,
             vocabulary: dict[str, str] | None = None,
             world: Any = None) -> AutoOutcome:
    """Drive a session with a deterministic designer until a terminal stage."""
    state = start_session(profile, index, k, vocabulary=vocabulary, world=world)
    reply = ""
    while not state.terminal:
        reply, state, _ = advance(state, designer(state))
    if state.stage == STAGE_DONE:
        return AutoOutcome("done", state.round, None, reply,
                           len(state.facts_collected), state)
    return AutoOutcome("failed", state.round, state.failure_reason, None,
                       len(state.facts_collected), state)


# --- persistence -----------------------------------------------------------------

def session_to_json(state: SessionState) -> dict:
    return {
        "format_version": SESSION_FORMAT_VERSION,
        "session_id": state.session_id,
        "stage": state.stage,
        "round": state.round,
        "k": state.k,
        "profile": {
            "name": state.profile.name,
            "context_limit": state.profile.context_limit,
            "completion_reserve": state.profile.completion_reserve,
            "backend": state.profile.backend,
        },
        "memory": state.memory.to_json(),
        "facts_needed": sorted(state.facts_needed),
        "facts_collected": sorted(state.facts_collected),
        "transcript": [list(t) for t in state.transcript],
        "trace": state.trace,
        "failure_reason": state.failure_reason,
        "vocabulary": state.vocabulary,
        "index_key": state.index_key,
    }


def session_from_json(data: dict, index: KnowledgeIndex | IngestFailure | None = None,
                      world: Any = None) -> SessionState:
    if data.get("format_version") != SESSION_FORMAT_VERSION:
        raise ValueError(f"unsupported session format {data.get('format_version')!r}")
    prof = data["profile"]
    state = SessionState(
        session_id=data["session_id"],
        profile=ModelProfile(name=prof["name"], context_limit=prof["context_limit"],
                             completion_reserve=prof["completion_reserve"],
                             backend=prof["backend"]),
        index=index,
        k=data["k"],
        stage=data["stage"],
        round=data["round"],
        memory=SessionMemory.from_json(data["memory"]),
        facts_needed=frozenset(data["facts_needed"]),
        facts_collected=set(data["facts_collected"]),
        transcript=[tuple(t) for t in data["transcript"]],
        trace=list(data["trace"]),
        failure_reason=data["failure_reason"],
        vocabulary=dict(data["vocabulary"]),
        world=world,
        index_key=data["index_key"],
    )
    return state


def export_trace(state: SessionState) -> str:
    return json.dumps({"session_id": state.session_id, "rounds": state.trace}, indent=2)
