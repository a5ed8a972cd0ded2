/** Transport abstraction over the session service's HTTP mapping.
 *
 * One method per request/response exchange; each resolves with the event
 * batch the server accumulated up to the next interaction point or the end
 * of the session.  Tests substitute an in-memory implementation.
 */

import type { EventBatch, HelloPayload } from "./protocol.js";

export interface Transport {
  start(hello: HelloPayload): Promise<EventBatch>;
  select(sessionId: string, word: string): Promise<EventBatch>;
  stop(sessionId: string): Promise<EventBatch>;
}

export class HttpTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  private async post(path: string, body: unknown): Promise<EventBatch> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const data = await resp.json();
    if (!resp.ok) {
      const message = data?.error?.message ?? `HTTP ${resp.status}`;
      throw new Error(message);
    }
    return data as EventBatch;
  }

  start(hello: HelloPayload): Promise<EventBatch> {
    return this.post("/api/sessions", hello);
  }

  select(sessionId: string, word: string): Promise<EventBatch> {
    return this.post(`/api/sessions/${sessionId}/select`, { word });
  }

  stop(sessionId: string): Promise<EventBatch> {
    return this.post(`/api/sessions/${sessionId}/stop`, {});
  }
}
