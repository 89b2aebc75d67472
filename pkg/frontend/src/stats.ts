/** Store statistics panel with a short history sparkline per counter. */

import type { StatsSnapshot } from "./wire.js";
import { escapeHtml } from "./wire.js";

export interface StatsSample {
  at: number; // ms timestamp of the poll
  snapshot: StatsSnapshot;
}

export class StatsHistory {
  samples: StatsSample[] = [];

  constructor(private cap: number = 120) {}

  push(snapshot: StatsSnapshot, at: number = Date.now()): void {
    this.samples.push({ at, snapshot });
    if (this.samples.length > this.cap) this.samples.splice(0, this.samples.length - this.cap);
  }

  latest(): StatsSnapshot | null {
    return this.samples.length === 0 ? null : this.samples[this.samples.length - 1].snapshot;
  }
}

function sparkline(values: number[], width = 140, height = 28): string {
  if (values.length === 0) return "";
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  const points = values
    .map((v, i) => `${(i * step).toFixed(1)},${(height - 2 - ((v - min) / span) * (height - 4)).toFixed(1)}`)
    .join(" ");
  return `<svg viewBox="0 0 ${width} ${height}" class="spark"><polyline points="${points}"/></svg>`;
}

const COUNTER_ROWS: [string, (s: StatsSnapshot) => number][] = [
  ["answers", (s) => s.store.answers],
  ["responses", (s) => s.store.responses],
  ["results", (s) => s.store.results],
  ["links", (s) => s.store.links],
  ["executed total", (s) => s.store.executed_total],
  ["trace bytes", (s) => s.store.trace_bytes],
  ["meta bytes", (s) => s.store.meta_bytes],
  ["purged total", (s) => s.store.purged_total],
];

export function renderStatsPanel(history: StatsHistory): string {
  const latest = history.latest();
  if (latest === null) return `<p class="stats-empty">no stats yet</p>`;
  const rows = COUNTER_ROWS.map(([label, pick]) => {
    const series = history.samples.map((s) => pick(s.snapshot));
    const current = pick(latest);
    return `<tr><td>${label}</td><td class="num" data-counter="${label.replace(/ /g, "-")}">${current}</td><td>${sparkline(series)}</td></tr>`;
  }).join("\n");
  const reuse = Object.keys(latest.store.reuse)
    .sort()
    .map((key) => `<span class="badge">${escapeHtml(key)} ${latest.store.reuse[key]}</span>`)
    .join(" ");
  return `<table class="stats-table"><tbody>${rows}</tbody></table>
  <p class="reuse-mix">${reuse === "" ? "no reuse recorded yet" : reuse}</p>
  <p class="uptime">events ${latest.events}, up ${latest.uptimeS.toFixed(0)} s</p>`;
}
