"""Append-only dialogue memory with a token-bounded digest.

The digest is deliberately dumb: newest-first truncation, no summarization,
so its content is a pure function of the records and the budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NonMonotoneRound
from .textutil import count_tokens

DIGEST_BUDGET_TOKENS = 600


@dataclass(frozen=True)
class MemoryRecord:
    round: int
    observation: str   # the user message
    thought: str       # agent's self-reported reasoning line
    action: str        # agent reply or tool act
    stage: str

    def line(self) -> str:
        return f"round {self.round} [{self.stage}]: {self.observation} | {self.action}"


@dataclass
class SessionMemory:
    records: list[MemoryRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: MemoryRecord) -> None:
        expected = self.records[-1].round + 1 if self.records else 1
        if record.round != expected:
            raise NonMonotoneRound(
                f"expected round {expected}, got {record.round}"
            )
        self.records.append(record)

    def digest(self, budget: int = DIGEST_BUDGET_TOKENS) -> str:
        """Newest-to-oldest record lines, dropping oldest lines once the
        budget would be exceeded. Empty memory digests to the empty string."""
        lines: list[str] = []
        text = ""
        for record in reversed(self.records):
            candidate = "\n".join(lines + [record.line()]) if lines else record.line()
            # lines are ordered newest first, so append at the end
            if count_tokens(candidate) > budget:
                break
            lines.append(record.line())
            text = candidate
        return text

    def to_json(self) -> list[dict]:
        return [
            {
                "round": r.round,
                "observation": r.observation,
                "thought": r.thought,
                "action": r.action,
                "stage": r.stage,
            }
            for r in self.records
        ]

    @staticmethod
    def from_json(data: list[dict]) -> "SessionMemory":
        memory = SessionMemory()
        for item in data:
            memory.append(MemoryRecord(
                round=item["round"],
                observation=item["observation"],
                thought=item["thought"],
                action=item["action"],
                stage=item["stage"],
            ))
        return memory
