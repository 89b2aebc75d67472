/** Live reuse-event feed.
 *
 * The feed is fed from a replay call plus the follow stream; both paths go
 * through ingest, which drops already-seen sequence numbers so a reconnect
 * that resumes from lastSeq never duplicates rows.
 */

import type { ReuseEvent, WireValue } from "./wire.js";
import { describeValue, escapeHtml } from "./wire.js";

export class EventFeed {
  rows: ReuseEvent[] = [];
  lastSeq = 0;

  constructor(private cap: number = 250) {}

  ingest(event: ReuseEvent): boolean {
    if (event.seq <= this.lastSeq) return false;
    this.lastSeq = event.seq;
    this.rows.push(event);
    if (this.rows.length > this.cap) this.rows.splice(0, this.rows.length - this.cap);
    return true;
  }

  ingestAll(events: ReuseEvent[]): number {
    let added = 0;
    for (const e of events) if (this.ingest(e)) added += 1;
    return added;
  }

  /** Sequence number to resume the stream from after a disconnect. */
  resumeFrom(): number {
    return this.lastSeq;
  }
}

/** Compact one-line summary of a canonical subject key. */
export function summarizeSubject(subject: string): string {
  try {
    const data = JSON.parse(subject);
    const bindings: Record<string, WireValue> | undefined = data.b ?? data.p;
    const parts: string[] = [];
    if (typeof data.k === "string") parts.push(data.k);
    if (typeof data.l === "string") parts.push(data.l);
    if (Array.isArray(data.poi)) parts.push(`poi={${data.poi.join(",")}}`);
    if (bindings !== undefined) {
      const inner = Object.keys(bindings)
        .sort()
        .map((name) => `${name}=${describeValue(bindings[name])}`)
        .join(", ");
      parts.push(inner);
    }
    return parts.length > 0 ? parts.join(" ") : subject;
  } catch {
    return subject;
  }
}

export function renderEventRows(rows: ReuseEvent[]): string {
  const body = rows
    .map((e) => {
      const distance = e.distance === undefined ? "" : e.distance.toFixed(3);
      return `<tr>
      <td class="num">${e.seq}</td>
      <td>${escapeHtml(e.kind)}</td>
      <td>${escapeHtml(e.layer)}</td>
      <td><span class="badge badge-${escapeHtml(e.mechanism)}">${escapeHtml(e.mechanism)}</span></td>
      <td class="num">${distance}</td>
      <td class="subject" title="${escapeHtml(e.subject)}">${escapeHtml(summarizeSubject(e.subject))}</td>
    </tr>`;
    })
    .join("\n");
  return `<table class="event-table">
    <thead><tr><th>seq</th><th>kind</th><th>layer</th><th>mechanism</th><th>distance</th><th>subject</th></tr></thead>
    <tbody>${body}</tbody>
  </table>`;
}
