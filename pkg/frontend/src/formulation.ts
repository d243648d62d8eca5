// Formulation viewer: variables, objective, and constraints in catalog
// order, with missing/extra kinds vs the reference highlighted.

import { h } from "./render.js";
import type { DiffView, FormulationResponse } from "./types.js";

export const KIND_CATALOG = [
  "power_budget",
  "qos_rate",
  "energy_harvest",
  "rsma_common_rate",
  "unit_modulus",
  "ps_ratio_range",
] as const;

export function diffHighlights(diff: DiffView): HTMLElement {
  const items: HTMLElement[] = [];
  for (const kind of KIND_CATALOG) {
    if (diff.missing_kinds.includes(kind)) {
      items.push(h("li", { class: "diff missing", "data-kind": kind }, [`missing: ${kind}`]));
    }
    if (diff.extra_kinds.includes(kind)) {
      items.push(h("li", { class: "diff extra", "data-kind": kind }, [`extra: ${kind}`]));
    }
  }
  for (const name of diff.variable_mismatches) {
    items.push(h("li", { class: "diff variable" }, [`variable mismatch: ${name}`]));
  }
  if (!diff.objective_match) {
    items.push(h("li", { class: "diff objective" }, ["objective differs from reference"]));
  }
  if (items.length === 0) {
    return h("div", { class: "diff-clean" }, ["matches the reference formulation"]);
  }
  return h("ul", { class: "diff-list" }, items);
}

export function formulationView(response: FormulationResponse): HTMLElement {
  const f = response.formulation;
  const variables = f.variables.map((v) =>
    h("li", { class: "variable" }, [`${v.name} : ${v.domain} [${v.shape}] — ${v.description}`]),
  );
  const missing = new Set(response.diff_vs_ground_truth.missing_kinds);
  const constraints = f.constraints.map((c) =>
    h("li", { class: "constraint", "data-kind": c.kind }, [
      `${c.name}[${c.kind}] : ${c.expression}`,
    ]),
  );
  for (const kind of KIND_CATALOG) {
    if (missing.has(kind)) {
      constraints.push(
        h("li", { class: "constraint missing", "data-kind": kind }, [`(missing) [${kind}]`]),
      );
    }
  }
  return h("section", { class: "formulation" }, [
    h("h2", {}, [`${f.sense} ${f.objective.name} := ${f.objective.expression}`]),
    h("h3", {}, ["variables"]),
    h("ul", { class: "variables" }, variables),
    h("h3", {}, ["constraints"]),
    h("ul", { class: "constraints" }, constraints),
    h("h3", {}, ["diff vs reference"]),
    diffHighlights(response.diff_vs_ground_truth),
  ]);
}

export function emptyFormulationView(): HTMLElement {
  return h("div", { class: "formulation-empty" }, [
    "no formulation yet — the session has not reached DONE",
  ]);
}

/** Constraint kinds of a rendered view, in display order (tests check catalog order). */
export function renderedKindOrder(root: HTMLElement): string[] {
  return Array.from(root.querySelectorAll("li.constraint")).map(
    (el) => el.getAttribute("data-kind") ?? "",
  );
}
