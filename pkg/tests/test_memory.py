import pytest
from hypothesis import given, settings, strategies as st

from formulink.errors import NonMonotoneRound
from formulink.memory import MemoryRecord, SessionMemory
from formulink.textutil import count_tokens


def record(n: int, obs="saw a thing", action="did a thing", stage="SCENARIO"):
    return MemoryRecord(round=n, observation=obs, thought="t", action=action, stage=stage)


class TestAppend:
    def test_first_round(self):
        memory = SessionMemory()
        memory.append(record(1))
        assert len(memory) == 1

    def test_round_gap_rejected(self):
        memory = SessionMemory()
        memory.append(record(1))
        with pytest.raises(NonMonotoneRound):
            memory.append(record(3))

    def test_round_repeat_rejected(self):
        memory = SessionMemory()
        memory.append(record(1))
        with pytest.raises(NonMonotoneRound):
            memory.append(record(1))


class TestDigest:
    def test_empty(self):
        assert SessionMemory().digest() == ""
        assert count_tokens(SessionMemory().digest()) == 0

    def test_small_memory_fully_included(self):
        memory = SessionMemory()
        for n in range(1, 5):
            memory.append(record(n, obs=f"observation {n}", action=f"action {n}"))
        digest = memory.digest()
        for n in range(1, 5):
            assert f"observation {n}" in digest

    def test_newest_first_ordering(self):
        memory = SessionMemory()
        for n in range(1, 11):
            memory.append(record(n))
        digest = memory.digest()
        lines = digest.splitlines()
        assert lines[0].startswith("round 10 ")
        assert lines[-1].startswith("round 1 ")

    def test_long_memory_respects_budget_and_keeps_latest(self):
        memory = SessionMemory()
        for n in range(1, 51):
            memory.append(record(n, obs="o" * 200, action=f"reply number {n} " + "a" * 200))
        digest = memory.digest(600)
        assert count_tokens(digest) <= 600
        assert memory.records[-1].line() in digest

    @given(st.lists(st.text(alphabet="abc xyz", min_size=0, max_size=120), min_size=0, max_size=30),
           st.integers(min_value=10, max_value=600))
    @settings(max_examples=50)
    def test_budget_and_recency_properties(self, texts, budget):
        memory = SessionMemory()
        for n, t in enumerate(texts, start=1):
            memory.append(record(n, obs=t, action=t[::-1]))
        digest = memory.digest(budget)
        assert count_tokens(digest) <= budget
        if digest:
            assert digest.splitlines()[0] == memory.records[-1].line().splitlines()[0]

    def test_append_only(self):
        memory = SessionMemory()
        memory.append(record(1, obs="original"))
        snapshot = memory.records[0]
        memory.append(record(2))
        memory.digest()
        assert memory.records[0] is snapshot
        assert memory.records[0].observation == "original"


class TestSerialization:
    def test_round_trip(self):
        memory = SessionMemory()
        for n in range(1, 4):
            memory.append(record(n, obs=f"obs{n}"))
        loaded = SessionMemory.from_json(memory.to_json())
        assert loaded.records == memory.records
