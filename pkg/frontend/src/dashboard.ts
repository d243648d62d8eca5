// Dashboards: the 5x3 sweep outcome/rounds heatmap and per-arm score
// charts. Every number shown exists verbatim in an API response; the
// client never recomputes results.

import { fmt, h, svg } from "./render.js";
import type { ComparisonResult, SweepResult } from "./types.js";

export const OUTCOME_GLYPHS: Record<string, string> = {
  done: "✓",
  failed_max_rounds: "⏱",
  failed_quality: "▢",
  context_oversize: "⤢",
  ingest_error: "✗",
};

export function sweepHeatmap(result: SweepResult): HTMLElement {
  const chunkSizes = [...new Set(result.rows.map((r) => r.chunk_size))].sort((a, b) => a - b);
  const kValues = [...new Set(result.rows.map((r) => r.k))].sort((a, b) => a - b);
  const header = h("tr", {}, [
    h("th", {}, ["chunk \\ k"]),
    ...kValues.map((k) => h("th", {}, [`k=${k}`])),
  ]);
  const body = chunkSizes.map((cs) =>
    h("tr", {}, [
      h("th", {}, [String(cs)]),
      ...kValues.map((k) => {
        const row = result.rows.find((r) => r.chunk_size === cs && r.k === k);
        if (!row) return h("td", {}, ["—"]);
        const glyph = OUTCOME_GLYPHS[row.outcome] ?? "?";
        const label = row.outcome === "done" ? `${glyph} ${row.rounds}r` : glyph;
        return h(
          "td",
          {
            class: `cell ${row.outcome}`,
            "data-chunk": String(cs),
            "data-k": String(k),
            "data-outcome": row.outcome,
            "data-rounds": String(row.rounds),
            title: `${row.outcome} (${row.rounds} rounds)`,
          },
          [label],
        );
      }),
    ]),
  );
  return h("table", { class: "sweep-heatmap" }, [header, ...body]);
}

export function comparisonChart(result: ComparisonResult): HTMLElement {
  const arms = ["real", "iai", "manual"] as const;
  const all: number[] = arms.flatMap((arm) => Object.values(result.arms[arm].scores));
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const width = 360;
  const height = 160;
  const pad = 24;
  const x = (i: number, n: number) => pad + (i * (width - 2 * pad)) / Math.max(1, n - 1);
  const y = (v: number) =>
    hi === lo ? height / 2 : height - pad - ((v - lo) * (height - 2 * pad)) / (hi - lo);

  const chart = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "comparison-chart",
    "data-lo": String(lo),
    "data-hi": String(hi),
  });
  for (const arm of arms) {
    const seeds = result.seeds.map(String);
    const values = seeds.map((s) => result.arms[arm].scores[s]);
    const points = values.map((v, i) => `${x(i, values.length).toFixed(1)},${y(v).toFixed(1)}`);
    chart.append(
      svg("polyline", {
        class: `arm ${arm}`,
        points: points.join(" "),
        fill: "none",
        "data-arm": arm,
        "data-values": values.map((v) => String(v)).join("|"),
      }),
    );
  }
  const medians = h(
    "ul",
    { class: "medians" },
    arms.map((arm) =>
      h("li", { class: `median ${arm}`, "data-arm": arm, "data-median": String(result.arms[arm].median) }, [
        `${arm}: median ${fmt(result.arms[arm].median)}`,
      ]),
    ),
  );
  const ordering = h(
    "ul",
    { class: "ordering" },
    Object.entries(result.ordering).map(([name, ok]) =>
      h("li", { class: ok ? "ok" : "violated", "data-check": name }, [
        `${name}: ${ok ? "ok" : "violated"}`,
      ]),
    ),
  );
  return h("section", { class: "comparison" }, [chart as unknown as HTMLElement, medians, ordering]);
}

export function pendingRunView(status: string): HTMLElement {
  return h("div", { class: "run-pending", "data-status": status }, [
    `run ${status}… polling`,
  ]);
}
