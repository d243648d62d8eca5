"""Deterministic evaluation world: synthetic corpus, scripted designer, scripted model.

The corpus is a single document of uniform 100-character sentences (25
tokens each), so greedy sentence-boundary chunking lands exactly on every
chunk-size grid under test. Twelve fact blocks (two per constraint kind)
are planted at engineered offsets:

* copy-a triples sit inside 2000-token grid cells, copy-b triples inside
  3000-token cells, so mid-size chunks surface three kinds per retrieval;
* the middle block of every triple straddles a 1000-token grid line with
  its core terms split 4/2 around the cut, so k<=3 retrieval at chunk 1000
  can never cover those two kinds while k=10 does (adjacent halves both
  match the query);
* at chunk 4000 every block is a sub-16% sliver of its chunk, which the
  extraction density rule rejects, and chunk 5000 exceeds the embedder
  input limit outright.

Core-term words are synthesized so their feature-hash coordinates are
reserved (disjoint from the filler vocabulary), making retrieval rankings
exact match-count comparisons rather than statistical ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import gateway
from .formulation import CONSTRAINT_KIND_CATALOG, reference_formulation, serialize
from .knowledge import EMBEDDING_DIM, Chunk, Document, _hash_word
from .textutil import count_tokens

# Extraction rule: a fact is usable iff the retrieved chunks cover >= 90% of
# its block and at least one retrieved chunk is >= 16% about that block.
COVERAGE_THRESHOLD = 0.90
DENSITY_THRESHOLD = 0.16

SENTENCE_TOKENS = 25          # 100 characters
BLOCK_TOKENS = 600            # 24 sentences per fact block
CORE_OFFSET = 300             # core span [300, 360) within the block
CORE_TOKENS = 60
JUNCTION_TOKENS = 50
PREAMBLE_TOKENS = 2000
CORPUS_TOKENS = 27800

CORPUS_DOC_ID = "eval_corpus"

# Feature-hash coordinate split: filler words only hash below this bound,
# core terms at or above it (each term on its own coordinate).
_FILLER_DIM_BOUND = 180
_FILLER_LEXICON_SIZE = 400

N_KINDS = len(CONSTRAINT_KIND_CATALOG)
N_FACTS = 2 * N_KINDS
TERMS_PER_FACT = 6


@dataclass(frozen=True)
class FactSpec:
    fact_id: int                   # 1..12
    kind: str                      # constraint kind this fact teaches
    copy: str                      # "a" | "b"
    core_terms: tuple[str, ...]    # 6 distinctive words
    block_span: tuple[int, int]    # [start, end) token offsets in the corpus
    core_span: tuple[int, int]     # 60-token window holding the terms

    @property
    def block_offset(self) -> int:
        return self.block_span[0]


# --- vocabulary ---------------------------------------------------------------

def _word_candidates(prefix: str, width: int):
    n = 0
    while True:
        word = f"{prefix}{n:0{width}d}"
        yield word
        n += 1


def _collect_words(prefix: str, width: int, count: int, want_reserved: bool,
                   taken: set[int]) -> list[str]:
    out: list[str] = []
    for word in _word_candidates(prefix, width):
        dim, _ = _hash_word(word)
        if want_reserved:
            if dim >= _FILLER_DIM_BOUND and dim not in taken:
                taken.add(dim)
                out.append(word)
        else:
            if dim < _FILLER_DIM_BOUND:
                out.append(word)
        if len(out) == count:
            return out
    raise RuntimeError("unreachable")


def _build_vocabulary():
    reserved: set[int] = set()
    term_words = _collect_words("fq", 7, N_FACTS * TERMS_PER_FACT, True, reserved)
    filler9 = _collect_words("flr", 6, _FILLER_LEXICON_SIZE, False, set())
    filler8 = _collect_words("fl", 6, _FILLER_LEXICON_SIZE, False, set())
    terms = {}
    i = 0
    for fid in range(1, N_FACTS + 1):
        terms[fid] = tuple(term_words[i:i + TERMS_PER_FACT])
        i += TERMS_PER_FACT
    return terms, filler9, filler8


# every term needs its own reserved hash coordinate
assert N_FACTS * TERMS_PER_FACT <= EMBEDDING_DIM - _FILLER_DIM_BOUND

_FACT_TERMS, _FILLER9, _FILLER8 = _build_vocabulary()


def _fact_id(kind_index: int, copy: str) -> int:
    return kind_index + 1 + (N_KINDS if copy == "b" else 0)


def fact_kind(fact_id: int) -> str:
    return CONSTRAINT_KIND_CATALOG[(fact_id - 1) % N_KINDS]


# --- corpus layout --------------------------------------------------------------
# (segment kind, token length, payload); fact payloads are (kind_index, copy).

def _cluster(kinds: tuple[int, int, int], copy: str) -> list[tuple]:
    segs: list[tuple] = []
    for pos, kind_index in enumerate(kinds):
        if pos:
            segs.append(("junction", JUNCTION_TOKENS, None))
        segs.append(("fact", BLOCK_TOKENS, (kind_index, copy)))
    return segs


def _gap(distractor_sizes: list[int]) -> list[tuple]:
    segs: list[tuple] = [("junction", JUNCTION_TOKENS, None)]
    for size in distractor_sizes:
        segs.append(("distractor", size, None))
        segs.append(("junction", JUNCTION_TOKENS, None))
    return segs


def _layout() -> list[tuple]:
    segs: list[tuple] = [("preamble", PREAMBLE_TOKENS, None)]
    segs += _gap([550] * 9 + [500])            # [2000, 8000)
    segs += _cluster((0, 1, 2), "a")           # [8000, 9900)
    segs += _gap([525] * 6 + [550])            # [9900, 14000)
    segs += _cluster((3, 4, 5), "a")           # [14000, 15900)
    segs += _gap([625, 625, 650])              # [15900, 18000)
    segs += _cluster((0, 1, 2), "b")           # [18000, 19900)
    segs += _gap([525] * 6 + [550])            # [19900, 24000)
    segs += _cluster((3, 4, 5), "b")           # [24000, 25900)
    # tail filler keeps the last chunk-4000 cell below the density threshold
    segs += [("junction", JUNCTION_TOKENS, None), ("distractor", 600, None),
             ("junction", JUNCTION_TOKENS, None), ("distractor", 600, None),
             ("junction", JUNCTION_TOKENS, None), ("distractor", 550, None)]
    return segs


def _filler_sentence(rng: np.random.Generator,
                     head_words: tuple[str, ...] = ()) -> str:
    words = list(head_words)
    while len(words) < 9:
        words.append(_FILLER9[rng.integers(len(_FILLER9))])
    words.append(_FILLER8[rng.integers(len(_FILLER8))])
    return " ".join(words) + ". "


def _block_sentences(rng: np.random.Generator, terms: tuple[str, ...] | None) -> list[str]:
    """24 sentences; when ``terms`` is given, sentences 12/13/14 open with
    term pairs so the core occupies tokens [300, 360) with a 4/2 split at 350."""
    sentences = []
    for i in range(BLOCK_TOKENS // SENTENCE_TOKENS):
        if terms and i == 12:
            sentences.append(_filler_sentence(rng, terms[0:2]))
        elif terms and i == 13:
            sentences.append(_filler_sentence(rng, terms[2:4]))
        elif terms and i == 14:
            sentences.append(_filler_sentence(rng, terms[4:6]))
        else:
            sentences.append(_filler_sentence(rng))
    return sentences


def generate_corpus(seed: int) -> tuple[Document, list[FactSpec]]:
    """Build the evaluation corpus; byte-identical for equal seeds."""
    rng = np.random.default_rng(seed)
    sentences: list[str] = []
    facts: list[FactSpec] = []
    offset = 0
    for kind, length, payload in _layout():
        n_sent = length // SENTENCE_TOKENS
        if kind == "fact":
            kind_index, copy = payload
            fid = _fact_id(kind_index, copy)
            terms = _FACT_TERMS[fid]
            sentences += _block_sentences(rng, terms)
            facts.append(FactSpec(
                fact_id=fid,
                kind=CONSTRAINT_KIND_CATALOG[kind_index],
                copy=copy,
                core_terms=terms,
                block_span=(offset, offset + BLOCK_TOKENS),
                core_span=(offset + CORE_OFFSET, offset + CORE_OFFSET + CORE_TOKENS),
            ))
        else:
            sentences += [_filler_sentence(rng) for _ in range(n_sent)]
        offset += length

    body = "".join(sentences).rstrip(" ")
    doc = Document.make(CORPUS_DOC_ID, "synthetic network-knowledge corpus", body)
    assert doc.token_count == CORPUS_TOKENS, doc.token_count
    assert offset == CORPUS_TOKENS
    facts.sort(key=lambda f: f.fact_id)
    spans = sorted(f.block_span for f in facts)
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:])), "blocks overlap"
    return doc, facts


# --- extraction rule -------------------------------------------------------------

def extractable_facts(retrieved: list[Chunk], facts: list[FactSpec]) -> set[int]:
    """Fact ids whose blocks are usable given this round's retrieved chunks.

    Coverage: the union of retrieved spans covers >= 90% of the block.
    Density: at least one retrieved chunk has >= 16% of its tokens inside it.
    """
    out: set[int] = set()
    for fact in facts:
        b0, b1 = fact.block_span
        block_len = b1 - b0
        pieces = []
        dense = False
        for chunk in retrieved:
            c0, c1 = chunk.token_span
            lo, hi = max(b0, c0), min(b1, c1)
            if hi <= lo:
                continue
            pieces.append((lo, hi))
            if (hi - lo) / (c1 - c0) >= DENSITY_THRESHOLD:
                dense = True
        if not dense or not pieces:
            continue
        pieces.sort()
        covered = 0
        cur_lo, cur_hi = pieces[0]
        for lo, hi in pieces[1:]:
            if lo > cur_hi:
                covered += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        covered += cur_hi - cur_lo
        if covered / block_len >= COVERAGE_THRESHOLD:
            out.add(fact.fact_id)
    return out


def extractable_kinds(retrieved: list[Chunk], facts: list[FactSpec]) -> set[str]:
    return {fact_kind(fid) for fid in extractable_facts(retrieved, facts)}


def query_vocabulary(facts: list[FactSpec]) -> dict[str, str]:
    """Per-kind retrieval vocabulary: the core terms of both copies."""
    vocab: dict[str, list[str]] = {k: [] for k in CONSTRAINT_KIND_CATALOG}
    for fact in facts:
        vocab[fact.kind].extend(fact.core_terms)
    return {k: " ".join(words) for k, words in vocab.items()}


# --- scripted designer ------------------------------------------------------------

_DESIGNER_LINES = {
    "REQUIREMENTS": "I need help formulating an optimization problem for a wireless network I am designing.",
    "SCENARIO": ("It is a RIS-assisted SWIPT network with RSMA: a multi-antenna transmitter, "
                 "a reconfigurable surface, and two users that split received power between "
                 "decoding and harvesting."),
    "OBJECTIVE": "I care about optimizing EE for this downlink.",
    "CONSTRAINT_GATHERING": "Please pull whatever constraint knowledge is still missing from the library.",
    "FORMULATE": "Everything needed is covered; please write out the final formulation.",
}


def scripted_designer(state) -> str:
    """Deterministic per-stage designer message; empty once the session is terminal."""
    return _DESIGNER_LINES.get(state.stage, "")


# --- scripted completion backend ----------------------------------------------------

def _format_kinds(kinds) -> str:
    ordered = [k for k in CONSTRAINT_KIND_CATALOG if k in set(kinds)]
    return ", ".join(ordered) if ordered else "none"


def scripted_complete(prompt: str, *, bundle=None, profile=None,
                      script_context: dict[str, Any] | None = None) -> str:
    """Stand-in for the hosted model; deterministic given the script context.

    Replies carry a THOUGHT line, stage-appropriate content, and a COLLECTED
    line naming the kinds newly extractable from this round's retrieval. In
    the final stage it emits the formulation block for exactly the collected
    kinds.
    """
    if script_context is None:
        raise gateway.MalformedReply("scripted backend needs a script context")
    stage = script_context["stage"]
    retrieved: list[Chunk] = list(script_context.get("retrieved", ()))
    facts: list[FactSpec] = list(script_context.get("world", ()))
    collected = list(script_context.get("collected", ()))
    missing = list(script_context.get("missing", ()))

    if stage == "REQUIREMENTS":
        return (
            "THOUGHT: A complete problem statement needs the setting, the goal, the knobs, and the limits.\n"
            "To proceed I need the system model, the optimization objective, the decision "
            "variables, and any necessary constraints. Please describe the scenario first."
        )

    newly = sorted(extractable_kinds(retrieved, facts) - set(collected),
                   key=CONSTRAINT_KIND_CATALOG.index)
    still_missing = [k for k in missing if k not in newly]

    if stage == "SCENARIO":
        return (
            "THOUGHT: Map the described network onto known component models and note covered topics.\n"
            "Understood: reflecting-surface assisted downlink with power splitting and a shared "
            "stream. Step-by-step plan: confirm the objective, close remaining constraint topics, "
            "then assemble the problem.\n"
            f"COLLECTED: {_format_kinds(newly)}\n"
            f"MISSING: {_format_kinds(still_missing)}"
        )
    if stage == "OBJECTIVE":
        return (
            "THOUGHT: Objective is energy efficiency; keep resolving constraint topics from the library.\n"
            "Objective noted: maximize EE, the delivered sum rate over total consumed power.\n"
            f"COLLECTED: {_format_kinds(newly)}\n"
            f"MISSING: {_format_kinds(still_missing)}"
        )
    if stage == "CONSTRAINT_GATHERING":
        return (
            "THOUGHT: Query the library for the still-missing constraint topics and log what was usable.\n"
            f"Newly covered this round: {_format_kinds(newly)}.\n"
            f"COLLECTED: {_format_kinds(newly)}\n"
            f"MISSING: {_format_kinds(still_missing)}"
        )
    if stage == "FORMULATE":
        kinds = [k for k in CONSTRAINT_KIND_CATALOG if k in set(collected) | set(newly)]
        block = serialize(reference_formulation(kinds))
        return (
            "THOUGHT: All gathered topics assembled; emitting the problem statement.\n"
            "Final formulation:\n"
            f"{block}"
        )
    raise gateway.MalformedReply(f"scripted backend has no script for stage {stage!r}")


def scripted_profile(name: str = "scripted-formulator") -> gateway.ModelProfile:
    return gateway.ModelProfile(name=name, backend="scripted")


try:
    gateway.register_backend("scripted", scripted_complete)
except gateway.DuplicateBackend:   # re-import under pytest path games
    pass
