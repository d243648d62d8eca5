// Formulation viewer tests over recorded fixtures.
// @vitest-environment jsdom

import { describe, expect, it } from "vitest";

import { loadFixture } from "./helpers.js";

import {
  KIND_CATALOG,
  emptyFormulationView,
  formulationView,
  renderedKindOrder,
} from "../src/formulation.js";
import type { FormulationResponse } from "../src/types.js";

const agentFormulation = loadFixture<FormulationResponse>("formulation.json");
const manualFormulation = loadFixture<FormulationResponse>("formulation_manual.json");

describe("agent-produced formulation (matches reference)", () => {
  it("renders with zero diff highlights", () => {
    const view = formulationView(agentFormulation);
    expect(view.querySelectorAll(".diff").length).toBe(0);
    expect(view.querySelector(".diff-clean")?.textContent).toContain("matches the reference");
  });

  it("lists every variable and constraint from the payload", () => {
    const view = formulationView(agentFormulation);
    expect(view.querySelectorAll(".variable").length).toBe(
      agentFormulation.formulation.variables.length,
    );
    expect(view.querySelectorAll("li.constraint").length).toBe(
      agentFormulation.formulation.constraints.length,
    );
    expect(view.querySelector("h2")?.textContent).toBe(
      `MAX EE := ${agentFormulation.formulation.objective.expression}`,
    );
  });

  it("orders constraint kinds by the catalog", () => {
    const view = formulationView(agentFormulation);
    const kinds = renderedKindOrder(view);
    const expected = [...KIND_CATALOG].filter((k) => kinds.includes(k));
    expect(kinds).toEqual(expected);
  });
});

describe("hand-written formulation (missing decodability)", () => {
  it("shows exactly one missing-kind highlight", () => {
    const view = formulationView(manualFormulation);
    const missing = view.querySelectorAll(".diff.missing");
    expect(missing.length).toBe(1);
    expect(missing[0].getAttribute("data-kind")).toBe("rsma_common_rate");
    expect(missing[0].textContent).toBe("missing: rsma_common_rate");
  });

  it("marks the missing constraint slot in the list", () => {
    const view = formulationView(manualFormulation);
    const placeholder = view.querySelector("li.constraint.missing");
    expect(placeholder?.getAttribute("data-kind")).toBe("rsma_common_rate");
  });
});

describe("empty state", () => {
  it("renders a message when no formulation exists", () => {
    expect(emptyFormulationView().textContent).toContain("no formulation yet");
  });
});
