// Thin typed client for the workbench HTTP API. The UI never computes a
// number itself: everything rendered comes verbatim from these responses.

import type { FormulationResponse, MessageReply, RunView, SessionView } from "./types.js";

export class ApiError extends Error {
  status: number;
  body: Record<string, unknown>;

  constructor(status: number, body: Record<string, unknown>) {
    super(String(body["error"] ?? `HTTP ${status}`));
    this.status = status;
    this.body = body;
  }
}

export class Client {
  baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new ApiError(response.status, payload);
    }
    return payload as T;
  }

  createSession(k: number, chunkSize: number): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", { k, chunk_size: chunkSize });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.request("POST", `/sessions/${sessionId}/messages`, { text });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  getFormulation(sessionId: string): Promise<FormulationResponse> {
    return this.request("GET", `/sessions/${sessionId}/formulation`);
  }

  startRun(kind: "sweep" | "compare", params: Record<string, unknown>): Promise<{ run_id: string }> {
    return this.request("POST", `/runs/${kind}`, params);
  }

  getRun(runId: string): Promise<RunView> {
    return this.request("GET", `/runs/${runId}`);
  }

  async pollRun(runId: string, intervalMs = 1000, timeoutMs = 600000): Promise<RunView> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const view = await this.getRun(runId);
      if (view.status === "finished" || view.status === "error") {
        return view;
      }
      if (Date.now() > deadline) {
        throw new Error(`run ${runId} still ${view.status} after ${timeoutMs} ms`);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
