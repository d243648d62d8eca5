// Chat panel: transcript, stage badge with the ten-round cap, per-round
// retrieval traces, and failure banners carrying the budget arithmetic.

import { ApiError, Client } from "./api.js";
import { h } from "./render.js";
import type { SessionView, TraceEntry } from "./types.js";

export const ROUND_CAP = 10;

export function stageBadge(stage: string, failureReason: string | null): HTMLElement {
  const cls = stage === "DONE" ? "badge done" : stage === "FAILED" ? "badge failed" : "badge live";
  const label = stage === "FAILED" && failureReason ? `FAILED (${failureReason})` : stage;
  return h("span", { class: cls, "data-stage": stage }, [label]);
}

export function roundCounter(round: number): HTMLElement {
  return h("span", { class: "rounds", "data-round": String(round) }, [
    `round ${round} / ${ROUND_CAP}`,
  ]);
}

export function traceView(entry: TraceEntry): HTMLElement {
  const rows = entry.retrieved.map((r) =>
    h("li", { class: "trace-chunk" }, [`${r.doc}#${r.chunk} score=${r.score.toFixed(4)}`]),
  );
  const items: (HTMLElement | string)[] = [
    h("div", { class: "trace-tokens" }, [`prompt tokens: ${entry.prompt_tokens}`]),
  ];
  if (entry.query !== null && entry.query !== undefined) {
    items.push(h("div", { class: "trace-query" }, [`query: ${entry.query}`]));
  }
  items.push(
    rows.length
      ? h("ul", { class: "trace-chunks" }, rows)
      : h("div", { class: "trace-empty" }, ["no retrieval this round"]),
  );
  return h("details", { class: "trace", "data-round": String(entry.round) }, [
    h("summary", {}, [`round ${entry.round} · ${entry.stage} · ${entry.retrieved.length} chunks`]),
    ...items,
  ]);
}

export function transcriptView(view: SessionView): HTMLElement {
  const turns = view.transcript.map(([role, text]) =>
    h("div", { class: `turn ${role}` }, [
      h("span", { class: "role" }, [role]),
      h("pre", { class: "text" }, [text]),
    ]),
  );
  return h("div", { class: "transcript" }, turns);
}

export function oversizeBanner(body: Record<string, unknown>): HTMLElement {
  const tokens = body["prompt_tokens"];
  const budget = body["budget"];
  return h("div", { class: "banner oversize" }, [
    `context oversize: assembled ${tokens} tokens exceeds the ${budget}-token budget ` +
      `(${Number(tokens) - Number(budget)} over); the session is closed`,
  ]);
}

export function errorBanner(status: number, body: Record<string, unknown>): HTMLElement {
  if (body["error_kind"] === "context_oversize") {
    return oversizeBanner(body);
  }
  return h("div", { class: "banner error" }, [`${status}: ${String(body["error"])}`]);
}

export function sessionPanel(view: SessionView): HTMLElement {
  return h("section", { class: "chat-panel", "data-session": view.session_id }, [
    h("header", {}, [stageBadge(view.stage, view.failure_reason), roundCounter(view.round)]),
    transcriptView(view),
    h("div", { class: "traces" }, view.trace.map(traceView)),
  ]);
}

/** Live chat controller; one in-flight message at a time. */
export class ChatController {
  client: Client;
  sessionId: string | null = null;
  busy = false;

  constructor(client: Client) {
    this.client = client;
  }

  async start(k: number, chunkSize: number): Promise<string> {
    const created = await this.client.createSession(k, chunkSize);
    this.sessionId = created.session_id;
    return this.sessionId;
  }

  async send(text: string, root: HTMLElement): Promise<SessionView> {
    if (!this.sessionId) throw new Error("no session");
    if (this.busy) throw new Error("a message is already in flight");
    this.busy = true;
    try {
      await this.client.sendMessage(this.sessionId, text);
    } catch (err) {
      if (err instanceof ApiError) {
        root.append(errorBanner(err.status, err.body));
      } else {
        throw err;
      }
    } finally {
      this.busy = false;
    }
    const view = await this.client.getSession(this.sessionId);
    root.replaceChildren(sessionPanel(view));
    return view;
  }
}
