/** Thin HTTP client for the reuse service.
 *
 * The fetch implementation is injected so tests can fake it; error bodies
 * come back as verbatim text, never reshaped.
 */

import type {
  LanguageDescriptor,
  QueryEnvelope,
  ReuseEvent,
  StatsSnapshot,
  WireQuery,
} from "./wire.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type QueryResult =
  | { ok: true; envelope: QueryEnvelope }
  | { ok: false; status: number; body: string };

export class ServiceClient {
  constructor(
    private base: string,
    private fetchImpl: FetchLike,
  ) {}

  private url(path: string): string {
    return this.base + path;
  }

  async postQuery(requestId: string, query: WireQuery): Promise<QueryResult> {
    const res = await this.fetchImpl(this.url("/query"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ requestId, query }),
    });
    if (!res.ok) return { ok: false, status: res.status, body: await res.text() };
    return { ok: true, envelope: (await res.json()) as QueryEnvelope };
  }

  async languages(): Promise<LanguageDescriptor[]> {
    const res = await this.fetchImpl(this.url("/languages"));
    if (!res.ok) throw new Error(`GET /languages failed: ${res.status}`);
    const data = await res.json();
    return data.languages as LanguageDescriptor[];
  }

  async stats(): Promise<StatsSnapshot> {
    const res = await this.fetchImpl(this.url("/stats"));
    if (!res.ok) throw new Error(`GET /stats failed: ${res.status}`);
    return (await res.json()) as StatsSnapshot;
  }

  async purge(): Promise<number> {
    const res = await this.fetchImpl(this.url("/admin/purge"), { method: "POST" });
    if (!res.ok) throw new Error(`POST /admin/purge failed: ${res.status}`);
    const data = await res.json();
    return data.removed as number;
  }

  async replayEvents(since: number): Promise<{ events: ReuseEvent[]; lastSeq: number }> {
    const res = await this.fetchImpl(this.url(`/events?since=${since}`));
    if (!res.ok) throw new Error(`GET /events failed: ${res.status}`);
    return (await res.json()) as { events: ReuseEvent[]; lastSeq: number };
  }

  /** Stream the ndjson event feed, invoking onEvent per line until the
   * connection closes or the signal aborts. Returns when the stream ends. */
  async followEvents(
    since: number,
    onEvent: (e: ReuseEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const res = await this.fetchImpl(this.url(`/events?since=${since}&follow=true`), { signal });
    if (!res.ok || res.body === null) throw new Error(`event stream failed: ${res.status}`);
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      const split = takeLines(buffer);
      buffer = split.rest;
      for (const line of split.lines) {
        const parsed = parseEventLine(line);
        if (parsed !== null) onEvent(parsed);
      }
    }
  }
}

/** Split off complete newline-terminated lines, keeping the partial tail. */
export function takeLines(buffer: string): { lines: string[]; rest: string } {
  const parts = buffer.split("\n");
  const rest = parts.pop() ?? "";
  return { lines: parts.filter((p) => p.length > 0), rest };
}

export function parseEventLine(line: string): ReuseEvent | null {
  try {
    const data = JSON.parse(line);
    if (typeof data.seq !== "number" || typeof data.kind !== "string") return null;
    return data as ReuseEvent;
  } catch {
    return null;
  }
}
