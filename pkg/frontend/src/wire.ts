/** Types mirroring the service's JSON wire format, plus small helpers.
 *
 * Every value here is passed through verbatim: magnitudes stay the decimal
 * strings the service sent (or the user typed), never re-derived numbers.
 */

// name, lo, hi, step, closed-upper flag (1 = inclusive)
export type BoxAxis = [string, string, string, string, number];

export type WireValue =
  | { q: [string, string] }
  | { sym: string }
  | { prof: string }
  | { box: BoxAxis[] };

export interface WireQuery {
  l: string;
  b: Record<string, WireValue>;
}

export type WireAnswer = { b: boolean } | { set: string[]; all_skipped: boolean };

export interface QueryEnvelope {
  requestId: string;
  queryKey: string;
  answer: WireAnswer;
  executed: number;
  reused: Record<string, number>;
  mechanism: string;
  events: { first: number; last: number };
}

export interface VariableDesc {
  kind: "real" | "symbol" | "box" | "profile";
  unit?: string;
  lo?: number;
  hi?: number;
  members?: string[];
  star?: boolean;
  axisVars?: string[];
}

export interface LanguageDescriptor {
  id: string;
  variables: Record<string, VariableDesc>;
  schemes: string[][];
  answer: { kind: string; pointVars?: string[] };
  request: { id: string; poiVars: string[] };
}

export interface StoreStats {
  answers: number;
  responses: number;
  results: number;
  links: number;
  executed_total: number;
  trace_bytes: number;
  meta_bytes: number;
  purged_total: number;
  reuse: Record<string, number>;
}

export interface StatsSnapshot {
  store: StoreStats;
  events: number;
  uptimeS: number;
  languages: string[];
}

export interface ReuseEvent {
  seq: number;
  ts: number;
  kind: string;
  layer: string;
  language: string;
  mechanism: string;
  subject: string;
  source?: string;
  distance?: number;
}

export function isBoolAnswer(a: WireAnswer): a is { b: boolean } {
  return "b" in a;
}

/** Parse one answer-set element (a canonical JSON string) into its bindings. */
export function parsePoint(element: string): Record<string, WireValue> {
  return JSON.parse(element);
}

export function quantityMagnitude(v: WireValue): string | null {
  return "q" in v ? v.q[0] : null;
}

/** Compact one-line rendering of a wire value, for tables and tooltips. */
export function describeValue(v: WireValue): string {
  if ("q" in v) return v.q[1] === "1" ? v.q[0] : `${v.q[0]} ${v.q[1]}`;
  if ("sym" in v) return v.sym;
  if ("prof" in v) return v.prof;
  return v.box.map(([name, lo, hi, step]) => `${name} ${lo}..${hi} step ${step}`).join(", ");
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
