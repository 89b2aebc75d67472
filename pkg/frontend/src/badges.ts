/** Mechanism badges summarizing how an answer was produced. */

import type { QueryEnvelope } from "./wire.js";
import { escapeHtml } from "./wire.js";

export interface Badge {
  label: string;
  count: number;
}

/** One badge for the top-level mechanism, one per layer/mechanism reuse
 * counter, and one for the executed-experiment count. */
export function mechanismBadges(envelope: QueryEnvelope): Badge[] {
  const badges: Badge[] = [{ label: envelope.mechanism, count: 1 }];
  for (const key of Object.keys(envelope.reused).sort()) {
    badges.push({ label: key, count: envelope.reused[key] });
  }
  badges.push({ label: "executed", count: envelope.executed });
  return badges;
}

export function renderBadges(badges: Badge[]): string {
  return badges
    .map((b) => {
      const slug = b.label.replace(/[^a-z-]/gi, "-");
      const count = b.label === "executed" || b.count !== 1 ? ` ${b.count}` : "";
      return `<span class="badge badge-${escapeHtml(slug)}">${escapeHtml(b.label)}${count}</span>`;
    })
    .join(" ");
}
