"""The 15-cell chunk-size/k sweep, printed as an outcome grid."""

from formulink.harness import run_sweep

table = run_sweep(corpus_seed=7)

k_values = (1, 3, 10)
print(f"{'chunk size':>10} | " + " | ".join(f"k={k:<20}" for k in k_values))
print("-" * 84)
for chunk_size in (1000, 2000, 3000, 4000, 5000):
    cells = []
    for k in k_values:
        row = table.row(chunk_size, k)
        label = row.outcome + (f" ({row.rounds}r)" if row.outcome == "done" else "")
        cells.append(f"{label:<22}")
    print(f"{chunk_size:>10} | " + " | ".join(cells))

done = [r for r in table.rows if r.outcome == "done"]
print(f"\n{len(done)} settings complete; fastest finishes in "
      f"{min(r.rounds for r in done)} rounds "
      f"(chunk {min(done, key=lambda r: r.rounds).chunk_size})")
