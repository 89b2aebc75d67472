import { describe, expect, it } from "vitest";

import { renderStatsPanel, StatsHistory } from "../src/stats.js";
import { zeroStats } from "./fixtures.js";

describe("stats panel", () => {
  it("renders a placeholder before the first poll", () => {
    expect(renderStatsPanel(new StatsHistory())).toContain("no stats yet");
  });

  it("renders zeros for an empty store", () => {
    const history = new StatsHistory();
    history.push(zeroStats(), 1);
    const html = renderStatsPanel(history);
    for (const counter of ["answers", "results", "executed-total", "meta-bytes"]) {
      expect(html).toContain(`data-counter="${counter}">0<`);
    }
    expect(html).toContain("no reuse recorded yet");
  });

  it("shows the latest sample after a purge shrinks the store", () => {
    const history = new StatsHistory();
    const before = zeroStats();
    before.store.meta_bytes = 5000;
    before.store.answers = 40;
    history.push(before, 1);
    const after = zeroStats();
    after.store.meta_bytes = 1200;
    after.store.answers = 3;
    after.store.purged_total = 37;
    history.push(after, 2);
    const html = renderStatsPanel(history);
    expect(html).toContain('data-counter="meta-bytes">1200<');
    expect(html).toContain('data-counter="answers">3<');
    expect(html).toContain('data-counter="purged-total">37<');
  });

  it("caps the retained history", () => {
    const history = new StatsHistory(3);
    for (let i = 0; i < 10; i += 1) history.push(zeroStats(), i);
    expect(history.samples).toHaveLength(3);
  });

  it("renders the reuse mix as badges", () => {
    const history = new StatsHistory();
    const snapshot = zeroStats();
    snapshot.store.reuse = { "user/direct": 9, "decomposition/fuzzy-retrieval": 2 };
    history.push(snapshot, 1);
    const html = renderStatsPanel(history);
    expect(html).toContain("user/direct 9");
    expect(html).toContain("decomposition/fuzzy-retrieval 2");
  });
});
