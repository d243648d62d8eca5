"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; anything else surfaces as a plain ValueError/RuntimeError.
"""

from __future__ import annotations


class FormulinkError(Exception):
    """Base class for all package-specific errors."""


# --- knowledge base ---------------------------------------------------------

class ChunkSizeTooSmall(FormulinkError):
    def __init__(self, chunk_size: int, minimum: int = 50):
        super().__init__(f"chunk_size {chunk_size} is below the minimum of {minimum} tokens")
        self.chunk_size = chunk_size
        self.minimum = minimum


class EmbedderOversize(FormulinkError):
    """Input exceeds the embedder's token limit.

    When raised during an index build, ``doc_id``/``chunk_index`` name the
    offending chunk.
    """

    def __init__(self, token_count: int, limit: int, doc_id: str | None = None,
                 chunk_index: int | None = None):
        where = f" (doc={doc_id!r}, chunk={chunk_index})" if doc_id is not None else ""
        super().__init__(f"text of {token_count} tokens exceeds embedder limit {limit}{where}")
        self.token_count = token_count
        self.limit = limit
        self.doc_id = doc_id
        self.chunk_index = chunk_index


# --- gateway ----------------------------------------------------------------

class ContextOversize(FormulinkError):
    def __init__(self, token_count: int, budget: int):
        super().__init__(f"assembled prompt of {token_count} tokens exceeds budget {budget}")
        self.token_count = token_count
        self.budget = budget


class BackendUnavailable(FormulinkError):
    def __init__(self, backend: str, attempts: int, last_error: str):
        super().__init__(f"backend {backend!r} unavailable after {attempts} attempts: {last_error}")
        self.backend = backend
        self.attempts = attempts
        self.last_error = last_error


class MalformedReply(FormulinkError):
    pass


class DuplicateBackend(FormulinkError):
    pass


class UnknownBackend(FormulinkError):
    pass


# --- dialogue ---------------------------------------------------------------

class NonMonotoneRound(FormulinkError):
    pass


class SessionClosed(FormulinkError):
    pass


class MaxRoundsExceeded(FormulinkError):
    pass


class IngestError(FormulinkError):
    """A session was started over a knowledge base whose build failed."""


# --- formulation grammar ----------------------------------------------------

class FormulationSyntaxError(FormulinkError):
    def __init__(self, line: int, column: int, expected: str):
        super().__init__(f"line {line}, column {column}: expected {expected}")
        self.line = line
        self.column = column
        self.expected = expected


class NoBlock(FormulinkError):
    pass


class MultipleBlocks(FormulinkError):
    pass


class UnknownKind(FormulinkError):
    def __init__(self, name: str):
        super().__init__(f"unknown constraint kind {name!r}")
        self.kind_name = name


# --- simulator / solver -----------------------------------------------------

class DimensionMismatch(FormulinkError):
    pass


class NonFiniteAction(FormulinkError):
    pass


class NonFiniteLoss(FormulinkError):
    pass


class EmptyEvalSet(FormulinkError):
    pass


class FormulationUnavailable(FormulinkError):
    pass


class IoError(FormulinkError):
    pass
