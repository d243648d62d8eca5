"""Build a knowledge index over the synthetic corpus and poke at retrieval.

Shows: sentence-boundary chunking on exact token grids, deterministic
hash embeddings, and how chunk size changes what a single query can reach.
"""

import numpy as np

from formulink import build_index, retrieve
from formulink.simworld import generate_corpus, query_vocabulary

doc, facts = generate_corpus(seed=7)
print(f"corpus: {doc.token_count} tokens, {len(facts)} planted fact blocks")

vocab = query_vocabulary(facts)
query = vocab["energy_harvest"]
print(f"\nquery (energy-harvest vocabulary): {query.split()[:4]} ...")

for chunk_size in (1000, 2000, 4000):
    index = build_index([doc], chunk_size)
    hits = retrieve(index, query, k=3)
    print(f"\nchunk_size={chunk_size}: {len(index.chunks)} chunks")
    for chunk, score in hits:
        start, end = chunk.token_span
        norm = float(np.linalg.norm(chunk.embedding))
        print(f"  {chunk.label:<16} span=[{start:>6},{end:>6})  "
              f"score={score:.4f}  |emb|={norm:.6f}")

print("\nsame query twice -> identical ranking:",
      [c.index for c, _ in retrieve(build_index([doc], 2000), query, 3)]
      == [c.index for c, _ in retrieve(build_index([doc], 2000), query, 3)])
