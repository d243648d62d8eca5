"""Knowledge base: chunking, deterministic embeddings, and top-k retrieval.

Documents are split into token-bounded chunks at sentence boundaries, each
chunk is embedded with signed feature hashing (no learned model, no network),
and retrieval is an exact cosine top-k over the stored matrix. Everything is
a pure function of its inputs, so indexes and rankings are reproducible
byte-for-byte.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChunkSizeTooSmall, EmbedderOversize, IoError
from .textutil import CHARS_PER_TOKEN, count_tokens, split_sentences, word_tokens

EMBEDDING_DIM = 256
EMBEDDER_LIMIT = 4500  # tokens; inputs beyond this refuse to embed
MIN_CHUNK_SIZE = 50

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    body: str
    token_count: int

    @staticmethod
    def make(doc_id: str, title: str, body: str) -> "Document":
        return Document(id=doc_id, title=title, body=body, token_count=count_tokens(body))


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    index: int              # 0-based ordinal within the document
    text: str
    token_span: tuple[int, int]   # [start, end) token offsets in the document
    embedding: np.ndarray         # unit norm, or zero for empty text

    @property
    def label(self) -> str:
        return f"{self.doc_id}#{self.index}"


@dataclass
class KnowledgeIndex:
    chunks: list[Chunk]
    chunk_size: int
    embedding_dim: int = EMBEDDING_DIM
    embedder_limit: int = EMBEDDER_LIMIT
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        """(n_chunks, dim) embedding matrix, rows in insertion order."""
        if self._matrix is None:
            if self.chunks:
                self._matrix = np.vstack([c.embedding for c in self.chunks])
            else:
                self._matrix = np.zeros((0, self.embedding_dim))
        return self._matrix


def _hash_word(word: str) -> tuple[int, float]:
    """Map a word to (coordinate, sign) deterministically.

    zlib.crc32 is stable across processes and platforms, unlike built-in
    hash() which is salted per interpreter.
    """
    h = zlib.crc32(word.encode("utf-8"))
    coord = h % EMBEDDING_DIM
    sign = 1.0 if (h >> 8) & 1 else -1.0
    return coord, sign


def embed(text: str) -> np.ndarray:
    """Signed feature-hash embedding, L2-normalized; zero vector for empty text."""
    n_tokens = count_tokens(text)
    if n_tokens > EMBEDDER_LIMIT:
        raise EmbedderOversize(n_tokens, EMBEDDER_LIMIT)
    vec = np.zeros(EMBEDDING_DIM)
    for word in word_tokens(text):
        coord, sign = _hash_word(word)
        vec[coord] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def split_into_chunks(doc: Document, chunk_size: int) -> list[str]:
    """Greedy sentence-boundary split; no chunk exceeds ``chunk_size`` tokens.

    The concatenation of the returned texts reproduces ``doc.body`` exactly
    (zero overlap). A single sentence longer than the budget is hard-split at
    the token boundary so the greedy rule still yields the minimum count.
    """
    if chunk_size < MIN_CHUNK_SIZE:
        raise ChunkSizeTooSmall(chunk_size, MIN_CHUNK_SIZE)
    max_chars = chunk_size * CHARS_PER_TOKEN
    texts: list[str] = []
    current: list[str] = []
    current_len = 0

    def flush() -> None:
        nonlocal current, current_len
        if current:
            texts.append("".join(current))
            current = []
            current_len = 0

    for piece in split_sentences(doc.body):
        if len(piece) > max_chars:
            flush()
            for start in range(0, len(piece), max_chars):
                part = piece[start:start + max_chars]
                if len(part) == max_chars:
                    texts.append(part)
                else:
                    current = [part]
                    current_len = len(part)
            continue
        if current_len + len(piece) > max_chars:
            flush()
        current.append(piece)
        current_len += len(piece)
    flush()
    return texts


def build_index(docs: list[Document], chunk_size: int) -> KnowledgeIndex:
    """Chunk and embed every document, in corpus order.

    Any embedding failure aborts the whole build; the raised EmbedderOversize
    is tagged with the offending chunk.
    """
    if chunk_size < MIN_CHUNK_SIZE:
        raise ChunkSizeTooSmall(chunk_size, MIN_CHUNK_SIZE)
    seen_ids: set[str] = set()
    chunks: list[Chunk] = []
    for doc in docs:
        if doc.id in seen_ids:
            raise ValueError(f"duplicate document id {doc.id!r}")
        seen_ids.add(doc.id)
        char_pos = 0
        for i, text in enumerate(split_into_chunks(doc, chunk_size)):
            try:
                vec = embed(text)
            except EmbedderOversize as exc:
                raise EmbedderOversize(exc.token_count, exc.limit, doc.id, i) from None
            start_token = char_pos // CHARS_PER_TOKEN
            chunks.append(Chunk(
                doc_id=doc.id,
                index=i,
                text=text,
                token_span=(start_token, start_token + count_tokens(text)),
                embedding=vec,
            ))
            char_pos += len(text)
    return KnowledgeIndex(chunks=chunks, chunk_size=chunk_size)


def retrieve(index: KnowledgeIndex, query: str, k: int) -> list[tuple[Chunk, float]]:
    """Top-k chunks by cosine similarity to the query embedding.

    Ties break by insertion order (document order, then chunk index); if k
    exceeds the chunk count, everything is returned. Scores are per-chunk
    dot products (not a blocked matrix-vector product), so an exhaustive
    re-scoring reproduces the ranking bit for bit.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not index.chunks:
        return []
    q = embed(query)
    scores = np.fromiter((chunk.embedding @ q for chunk in index.chunks),
                         dtype=float, count=len(index.chunks))
    # stable sort on negated scores == descending score with insertion-order ties
    order = np.argsort(-scores, kind="stable")[:k]
    return [(index.chunks[i], float(scores[i])) for i in order]


# --- persistence ------------------------------------------------------------

def save_index(index: KnowledgeIndex, path: str | Path) -> None:
    payload = {
        "format_version": INDEX_FORMAT_VERSION,
        "chunk_size": index.chunk_size,
        "embedding_dim": index.embedding_dim,
        "embedder_limit": index.embedder_limit,
        "chunks": [
            {
                "doc_id": c.doc_id,
                "index": c.index,
                "text": c.text,
                "token_span": list(c.token_span),
                "embedding": c.embedding.tolist(),
            }
            for c in index.chunks
        ],
    }
    try:
        Path(path).write_text(json.dumps(payload), encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_index(path: str | Path) -> KnowledgeIndex:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if payload.get("format_version") != INDEX_FORMAT_VERSION:
        raise IoError(f"unsupported index format version {payload.get('format_version')!r}")
    chunks = [
        Chunk(
            doc_id=c["doc_id"],
            index=c["index"],
            text=c["text"],
            token_span=(c["token_span"][0], c["token_span"][1]),
            embedding=np.asarray(c["embedding"], dtype=float),
        )
        for c in payload["chunks"]
    ]
    return KnowledgeIndex(
        chunks=chunks,
        chunk_size=payload["chunk_size"],
        embedding_dim=payload["embedding_dim"],
        embedder_limit=payload["embedder_limit"],
    )


# --- corpus directory format --------------------------------------------------
# A corpus on disk is a directory of UTF-8 text files plus manifest.json:
#   [{"id": ..., "title": ..., "file": ...}, ...]

def write_corpus(directory: str | Path, docs: list[Document]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = []
    for doc in docs:
        filename = f"{doc.id}.txt"
        (directory / filename).write_text(doc.body, encoding="utf-8")
        manifest.append({"id": doc.id, "title": doc.title, "file": filename})
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def load_corpus(directory: str | Path) -> list[Document]:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise IoError(f"no manifest.json in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    docs = []
    for entry in manifest:
        body = (directory / entry["file"]).read_text(encoding="utf-8")
        docs.append(Document.make(entry["id"], entry["title"], body))
    return docs
