// Dashboard tests: heatmap and charts render recorded run results and
// display exactly the numbers the API returned.
// @vitest-environment jsdom

import { describe, expect, it } from "vitest";

import { loadFixture } from "./helpers.js";

import { OUTCOME_GLYPHS, comparisonChart, pendingRunView, sweepHeatmap } from "../src/dashboard.js";
import type { ComparisonResult, RunView, SweepResult } from "../src/types.js";

const sweepRun = loadFixture<RunView>("sweep_run.json");
const comparisonRun = loadFixture<RunView>("comparison_run.json");

const sweep = sweepRun.result as SweepResult;
const comparison = comparisonRun.result as ComparisonResult;

describe("sweep heatmap", () => {
  it("renders a 5x3 grid", () => {
    const table = sweepHeatmap(sweep);
    expect(table.querySelectorAll("td.cell").length).toBe(15);
    expect(table.querySelectorAll("tr").length).toBe(6); // header + 5 chunk sizes
  });

  it("cell outcomes equal the recorded table exactly", () => {
    const table = sweepHeatmap(sweep);
    for (const row of sweep.rows) {
      const cell = table.querySelector(
        `td[data-chunk="${row.chunk_size}"][data-k="${row.k}"]`,
      );
      expect(cell?.getAttribute("data-outcome")).toBe(row.outcome);
      expect(cell?.getAttribute("data-rounds")).toBe(String(row.rounds));
    }
  });

  it("ingest-error glyph appears for every k at chunk 5000", () => {
    const table = sweepHeatmap(sweep);
    for (const k of [1, 3, 10]) {
      const cell = table.querySelector(`td[data-chunk="5000"][data-k="${k}"]`);
      expect(cell?.textContent).toBe(OUTCOME_GLYPHS.ingest_error);
    }
  });

  it("happy-path cell shows its round count", () => {
    const table = sweepHeatmap(sweep);
    const cell = table.querySelector('td[data-chunk="2000"][data-k="1"]');
    const recorded = sweep.rows.find((r) => r.chunk_size === 2000 && r.k === 1);
    expect(cell?.textContent).toBe(`${OUTCOME_GLYPHS.done} ${recorded?.rounds}r`);
  });
});

describe("comparison chart", () => {
  it("renders one polyline per arm with the exact score values", () => {
    const view = comparisonChart(comparison);
    for (const arm of ["real", "iai", "manual"]) {
      const line = view.querySelector(`polyline[data-arm="${arm}"]`);
      const recorded = comparison.seeds
        .map((s) => comparison.arms[arm].scores[String(s)])
        .map(String)
        .join("|");
      expect(line?.getAttribute("data-values")).toBe(recorded);
    }
  });

  it("median labels equal the API medians", () => {
    const view = comparisonChart(comparison);
    for (const arm of ["real", "iai", "manual"]) {
      const item = view.querySelector(`li.median[data-arm="${arm}"]`);
      expect(item?.getAttribute("data-median")).toBe(String(comparison.arms[arm].median));
    }
  });

  it("ordering checks render with their verdicts", () => {
    const view = comparisonChart(comparison);
    for (const [name, ok] of Object.entries(comparison.ordering)) {
      const item = view.querySelector(`li[data-check="${name}"]`);
      expect(item?.textContent).toContain(ok ? "ok" : "violated");
    }
  });
});

describe("pending run", () => {
  it("shows the polling spinner state", () => {
    expect(pendingRunView("running").textContent).toContain("running");
  });
});
