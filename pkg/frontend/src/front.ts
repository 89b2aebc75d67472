/** Pareto front view: an SVG scatter of the answer set.
 *
 * Every circle comes from one answer-set element; its data-key attribute
 * carries that element verbatim so the rendered set can be compared
 * against the service answer element for element. Coordinates are parsed
 * only to position circles; displayed numbers stay the served strings.
 */

import type { WireAnswer, WireValue } from "./wire.js";
import { describeValue, escapeHtml, parsePoint, quantityMagnitude } from "./wire.js";

export interface FrontPoint {
  key: string; // the canonical set element, verbatim
  soc: string;
  tbl: string;
  vars: Record<string, WireValue>;
}

export function parseFrontPoints(answer: WireAnswer): FrontPoint[] {
  if (!("set" in answer)) return [];
  const points: FrontPoint[] = [];
  for (const element of answer.set) {
    const vars = parsePoint(element);
    const soc = vars.SoC !== undefined ? quantityMagnitude(vars.SoC) : null;
    const tbl = vars.TBL !== undefined ? quantityMagnitude(vars.TBL) : null;
    points.push({ key: element, soc: soc ?? "", tbl: tbl ?? "", vars });
  }
  return points;
}

const W = 460;
const H = 320;
const PAD = 48;

function scale(values: number[], lo: number, hi: number): (x: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  if (min === max) return () => (lo + hi) / 2;
  return (x) => lo + ((x - min) / (max - min)) * (hi - lo);
}

function unitOf(v: WireValue | undefined): string {
  if (v !== undefined && "q" in v && v.q[1] !== "1") return v.q[1];
  return "";
}

export function renderFrontView(answer: WireAnswer): string {
  if (!("set" in answer)) return "";
  if (answer.set.length === 0) {
    const reason = answer.all_skipped
      ? "every swept configuration was excluded as unstable (all skipped)"
      : "empty front";
    return `<p class="front-empty">${escapeHtml(reason)}</p>`;
  }
  const points = parseFrontPoints(answer);
  const xs = points.map((p) => Number(p.tbl));
  const ys = points.map((p) => Number(p.soc));
  const sx = scale(xs, PAD, W - PAD);
  const sy = scale(ys, H - PAD, PAD); // SVG y grows downward
  const xUnit = unitOf(points[0].vars.TBL);
  const yUnit = unitOf(points[0].vars.SoC);

  const circles = points
    .map((p, i) => {
      const lines = Object.keys(p.vars)
        .sort()
        .map((name) => `${name} ${describeValue(p.vars[name])}`);
      return `<circle class="front-point highlight" data-key="${escapeHtml(p.key)}"
        cx="${sx(xs[i]).toFixed(1)}" cy="${sy(ys[i]).toFixed(1)}" r="6">
        <title>${escapeHtml(lines.join("\n"))}</title></circle>`;
    })
    .join("\n");

  return `<svg viewBox="0 0 ${W} ${H}" class="front-view" role="img">
    <line x1="${PAD}" y1="${H - PAD}" x2="${W - PAD}" y2="${H - PAD}" class="axis"/>
    <line x1="${PAD}" y1="${PAD}" x2="${PAD}" y2="${H - PAD}" class="axis"/>
    <text x="${W / 2}" y="${H - 12}" class="axis-label">TBL${xUnit ? ` (${xUnit})` : ""}</text>
    <text x="14" y="${H / 2}" class="axis-label" transform="rotate(-90 14 ${H / 2})">SoC${yUnit ? ` (${yUnit})` : ""}</text>
    ${circles}
  </svg>
  <p class="front-note">${points.length} non-dominated point${points.length === 1 ? "" : "s"}; hover a point for its layout.</p>`;
}
