import numpy as np
import pytest

from formulink import simworld
from formulink.formulation import (
    CONSTRAINT_KIND_CATALOG,
    diff,
    ground_truth_formulation,
    parse_formulation,
)
from formulink.knowledge import Chunk, build_index
from formulink.simworld import (
    COVERAGE_THRESHOLD,
    DENSITY_THRESHOLD,
    FactSpec,
    extractable_facts,
    extractable_kinds,
    generate_corpus,
    query_vocabulary,
    scripted_complete,
    scripted_designer,
)


def fake_chunk(start: int, end: int) -> Chunk:
    return Chunk(doc_id="d", index=0, text="", token_span=(start, end),
                 embedding=np.zeros(1))


def fake_fact(block_start: int = 0) -> FactSpec:
    return FactSpec(fact_id=1, kind="power_budget", copy="a",
                    core_terms=("a", "b", "c", "d", "e", "f"),
                    block_span=(block_start, block_start + 600),
                    core_span=(block_start + 300, block_start + 360))


class TestCorpusGeneration:
    def test_same_seed_byte_identical(self):
        a, _ = generate_corpus(3)
        b, _ = generate_corpus(3)
        assert a.body == b.body

    def test_different_seed_differs(self):
        a, _ = generate_corpus(3)
        b, _ = generate_corpus(4)
        assert a.body != b.body

    def test_token_count_in_range(self):
        doc, _ = generate_corpus(7)
        assert 26000 <= doc.token_count <= 30000

    def test_blocks_inside_document_and_disjoint(self):
        doc, facts = generate_corpus(7)
        assert len(facts) == 12
        spans = sorted(f.block_span for f in facts)
        for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
            assert e0 <= s1
        assert spans[0][0] >= 0
        assert spans[-1][1] <= doc.token_count

    def test_two_facts_per_kind(self):
        _, facts = generate_corpus(7)
        for kind in CONSTRAINT_KIND_CATALOG:
            assert sum(1 for f in facts if f.kind == kind) == 2

    def test_core_terms_present_in_core_span_only_textually(self):
        doc, facts = generate_corpus(7)
        for fact in facts:
            # terms appear exactly once in the whole corpus, inside the block
            for term in fact.core_terms:
                assert doc.body.count(term) == 1
            lo, hi = fact.core_span
            window = doc.body[lo * 4:hi * 4]
            present = sum(term in window for term in fact.core_terms)
            assert present == len(fact.core_terms)


class TestExtractionRule:
    def test_whole_block_in_midsize_chunk(self):
        # coverage 100%, density 600/1000 = 60%
        fact = fake_fact(block_start=200)
        assert extractable_facts([fake_chunk(0, 1000)], [fact]) == {1}

    def test_large_chunk_fails_density(self):
        # density 600/4000 = 15% < 16%
        fact = fake_fact(block_start=1000)
        assert extractable_facts([fake_chunk(0, 4000)], [fact]) == set()

    def test_half_block_fails_coverage(self):
        # single 1000-chunk covering 350/600 of the block
        fact = fake_fact(block_start=650)
        assert extractable_facts([fake_chunk(0, 1000)], [fact]) == set()

    def test_adjacent_union_recovers_split_block(self):
        fact = fake_fact(block_start=650)
        chunks = [fake_chunk(0, 1000), fake_chunk(1000, 2000)]
        assert extractable_facts(chunks, [fact]) == {1}

    def test_exact_coverage_boundary_inclusive(self):
        # 540/600 = exactly 90%
        fact = fake_fact(block_start=0)
        assert extractable_facts([fake_chunk(0, 540)], [fact]) == {1}
        assert extractable_facts([fake_chunk(0, 539)], [fact]) == set()

    def test_thresholds_are_module_constants(self):
        assert COVERAGE_THRESHOLD == 0.90
        assert DENSITY_THRESHOLD == 0.16


class TestScriptedBackend:
    def setup_method(self):
        self.doc, self.facts = generate_corpus(7)
        self.vocab = query_vocabulary(self.facts)

    def _ctx(self, stage, retrieved=(), collected=(), missing=None):
        return {"stage": stage, "retrieved": list(retrieved), "world": self.facts,
                "collected": list(collected),
                "missing": list(missing if missing is not None
                                else CONSTRAINT_KIND_CATALOG)}

    def test_requirements_reply_names_the_four_items(self):
        reply = scripted_complete("", script_context=self._ctx("REQUIREMENTS"))
        assert reply.startswith("THOUGHT:")
        for phrase in ("system model", "optimization objective",
                       "decision variables", "constraints"):
            assert phrase in reply

    def test_formulate_with_all_kinds_matches_ground_truth(self):
        reply = scripted_complete(
            "", script_context=self._ctx("FORMULATE",
                                         collected=CONSTRAINT_KIND_CATALOG,
                                         missing=[]))
        parsed = parse_formulation(reply)
        assert diff(parsed, ground_truth_formulation()).empty

    def test_formulate_without_rsma_facts(self):
        kinds = [k for k in CONSTRAINT_KIND_CATALOG if k != "rsma_common_rate"]
        reply = scripted_complete(
            "", script_context=self._ctx("FORMULATE", collected=kinds, missing=[]))
        parsed = parse_formulation(reply)
        d = diff(parsed, ground_truth_formulation())
        assert d.missing_kinds == {"rsma_common_rate"}
        assert d.extra_kinds == frozenset()

    def test_gathering_names_newly_extractable(self):
        index = build_index([self.doc], 2000)
        # the chunk containing the first copy-a cluster
        cluster_chunk = next(c for c in index.chunks if c.token_span == (8000, 10000))
        reply = scripted_complete(
            "", script_context=self._ctx("CONSTRAINT_GATHERING",
                                         retrieved=[cluster_chunk]))
        assert "COLLECTED: power_budget, qos_rate, energy_harvest" in reply
        assert reply.startswith("THOUGHT:")

    def test_missing_context_rejected(self):
        from formulink.errors import MalformedReply
        with pytest.raises(MalformedReply):
            scripted_complete("")


class TestScriptedDesigner:
    class _State:
        def __init__(self, stage):
            self.stage = stage

    def test_scenario_names_the_network(self):
        msg = scripted_designer(self._State("SCENARIO"))
        assert "RIS-assisted SWIPT network with RSMA" in msg

    def test_objective_mentions_ee(self):
        assert "optimizing EE" in scripted_designer(self._State("OBJECTIVE"))

    def test_terminal_stage_empty(self):
        assert scripted_designer(self._State("DONE")) == ""
        assert scripted_designer(self._State("FAILED")) == ""


class TestVocabulary:
    def test_kind_vocabulary_covers_both_copies(self):
        _, facts = generate_corpus(7)
        vocab = query_vocabulary(facts)
        assert set(vocab) == set(CONSTRAINT_KIND_CATALOG)
        for kind, phrase in vocab.items():
            assert len(phrase.split()) == 12  # 6 terms x 2 copies

    def test_extractable_kinds_maps_ids(self):
        doc, facts = generate_corpus(7)
        index = build_index([doc], 2000)
        chunk = next(c for c in index.chunks if c.token_span == (8000, 10000))
        kinds = extractable_kinds([chunk], facts)
        assert kinds == {"power_budget", "qos_rate", "energy_harvest"}
