// Page wiring: base-URL configuration, chat, formulation, and dashboards.
// Run polling is 1 s; one in-flight message per session is enforced by the
// chat controller.

import { Client } from "./api.js";
import { ChatController, sessionPanel } from "./chat.js";
import { emptyFormulationView, formulationView } from "./formulation.js";
import { comparisonChart, pendingRunView, sweepHeatmap } from "./dashboard.js";
import { clear, h } from "./render.js";
import type { ComparisonResult, SweepResult } from "./types.js";

export function mount(root: HTMLElement, baseUrl: string): void {
  const client = new Client(baseUrl);
  const chat = new ChatController(client);

  const chatRoot = h("div", { id: "chat-root" });
  const formulationRoot = h("div", { id: "formulation-root" }, [emptyFormulationView()]);
  const dashboardRoot = h("div", { id: "dashboard-root" });

  const input = h("input", { id: "designer-input", placeholder: "designer message" }) as HTMLInputElement;
  const send = h("button", { id: "send" }, ["send"]) as HTMLButtonElement;
  const newSession = h("button", { id: "new-session" }, ["new session"]) as HTMLButtonElement;
  const runSweep = h("button", { id: "run-sweep" }, ["run sweep"]) as HTMLButtonElement;
  const runCompare = h("button", { id: "run-compare" }, ["run comparison"]) as HTMLButtonElement;

  newSession.addEventListener("click", () => {
    void (async () => {
      const k = Number((document.getElementById("k-input") as HTMLInputElement)?.value || "1");
      const chunk = Number(
        (document.getElementById("chunk-input") as HTMLInputElement)?.value || "2000",
      );
      const sid = await chat.start(k, chunk);
      const view = await client.getSession(sid);
      chatRoot.replaceChildren(sessionPanel(view));
    })();
  });

  send.addEventListener("click", () => {
    void (async () => {
      if (!chat.sessionId || chat.busy || !input.value) return;
      send.disabled = true;
      try {
        const view = await chat.send(input.value, chatRoot);
        input.value = "";
        if (view.stage === "DONE") {
          const formulation = await client.getFormulation(view.session_id);
          formulationRoot.replaceChildren(formulationView(formulation));
        }
      } finally {
        send.disabled = false;
      }
    })();
  });

  runSweep.addEventListener("click", () => {
    void (async () => {
      const started = await client.startRun("sweep", {});
      dashboardRoot.replaceChildren(pendingRunView("pending"));
      const finished = await client.pollRun(started.run_id);
      clear(dashboardRoot);
      if (finished.status === "finished" && finished.result) {
        dashboardRoot.append(sweepHeatmap(finished.result as SweepResult));
      }
    })();
  });

  runCompare.addEventListener("click", () => {
    void (async () => {
      const started = await client.startRun("compare", {});
      dashboardRoot.replaceChildren(pendingRunView("pending"));
      const finished = await client.pollRun(started.run_id);
      clear(dashboardRoot);
      if (finished.status === "finished" && finished.result) {
        dashboardRoot.append(comparisonChart(finished.result as ComparisonResult));
      }
    })();
  });

  root.append(
    h("header", {}, [
      h("h1", {}, ["formulation workbench"]),
      h("label", {}, ["k ", h("input", { id: "k-input", value: "1", size: "3" })]),
      h("label", {}, ["chunk ", h("input", { id: "chunk-input", value: "2000", size: "6" })]),
      newSession,
    ]),
    chatRoot,
    h("div", { class: "composer" }, [input, send]),
    formulationRoot,
    h("div", { class: "runs" }, [runSweep, runCompare]),
    dashboardRoot,
  );
}

declare global {
  interface Window {
    FORMULINK_BASE_URL?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app") as HTMLElement,
        window.FORMULINK_BASE_URL ?? "http://127.0.0.1:8765");
}
