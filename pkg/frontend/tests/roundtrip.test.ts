/** End-to-end round trip against a real service instance.
 *
 * Spawns the Python service, drives it with the same modules the page
 * uses, and cross-checks the console rendering against headless HTTP
 * calls. Requires the package installed in the ambient python3.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { EventFeed } from "../src/events.js";
import { buildQuery, type RawForm } from "../src/form.js";
import { renderFrontView } from "../src/front.js";
import { escapeHtml, isBoolAnswer, type QueryEnvelope } from "../src/wire.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const repoRoot = fileURLToPath(new URL("../..", import.meta.url));

let service: ChildProcess;
const client = new ServiceClient(BASE, (url, init) => fetch(url, init));

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 60; attempt += 1) {
    try {
      const res = await fetch(`${BASE}/stats`);
      if (res.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  service = spawn("python3", ["-m", "expreuse", "serve", "--port", String(PORT)], {
    cwd: repoRoot,
    stdio: "ignore",
  });
  await waitForService();
}, 45_000);

afterAll(() => {
  service.kill();
});

const ENG_RAW: RawForm = {
  values: { m: "20000", F_B: "0.09", v: "120", mu: "0.7", theta: "10", dist: "1600" },
  axes: {},
};

describe("console against a live service", () => {
  it("submits the form-built safety query and matches a headless post", async () => {
    const descs = await client.languages();
    const eng = descs.find((d) => d.id === "train-eng");
    expect(eng).toBeDefined();

    const built = buildQuery(eng!, ENG_RAW);
    expect(built.errors).toEqual([]);
    const consoleResult = await client.postQuery("rt-console-1", built.query!);
    expect(consoleResult.ok).toBe(true);
    if (!consoleResult.ok) return;

    // headless request with the same query body, bypassing the form code
    const headlessRes = await fetch(`${BASE}/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ requestId: "rt-headless-1", query: built.query }),
    });
    expect(headlessRes.status).toBe(200);
    const headless = (await headlessRes.json()) as QueryEnvelope;

    expect(isBoolAnswer(consoleResult.envelope.answer)).toBe(true);
    expect(consoleResult.envelope.answer).toEqual(headless.answer);
    const consoleVerdict = isBoolAnswer(consoleResult.envelope.answer) && consoleResult.envelope.answer.b;
    const headlessVerdict = isBoolAnswer(headless.answer) && headless.answer.b;
    expect(consoleVerdict).toBe(headlessVerdict);
    // the repeat answer came from the store, not a re-run
    expect(headless.mechanism).toBe("direct");
    expect(headless.executed).toBe(0);
  });

  it("renders the scatter from the answer set element for element", async () => {
    const descs = await client.languages();
    const tms = descs.find((d) => d.id === "tms-sweep");
    const raw: RawForm = {
      values: { stim: "standard-drive-cycle" },
      axes: {
        Voltage: { sweep: true, fixed: "", lo: "320", hi: "400", step: "80" },
        MaxTorque: { sweep: true, fixed: "", lo: "800", hi: "900", step: "100" },
        InternalRes: { sweep: false, fixed: "0.05", lo: "", hi: "", step: "" },
      },
    };
    const built = buildQuery(tms!, raw);
    expect(built.errors).toEqual([]);
    const result = await client.postQuery("rt-tms-1", built.query!);
    expect(result.ok).toBe(true);
    if (!result.ok) return;

    const answer = result.envelope.answer;
    expect("set" in answer).toBe(true);
    if (!("set" in answer)) return;
    expect(answer.set.length).toBeGreaterThan(0);

    const svg = renderFrontView(answer);
    const rendered = svg.match(/data-key="/g) ?? [];
    expect(rendered).toHaveLength(answer.set.length);
    for (const element of answer.set) {
      expect(svg).toContain(`data-key="${escapeHtml(element)}"`);
    }
  });

  it("resumes the event feed from the last seen sequence", async () => {
    const feed = new EventFeed();
    const replay = await client.replayEvents(0);
    expect(replay.events.length).toBeGreaterThan(0);
    feed.ingestAll(replay.events);
    const seen = feed.resumeFrom();
    expect(seen).toBe(replay.lastSeq);

    // trigger fresh events, then resume strictly after the watermark
    const descs = await client.languages();
    const eng = descs.find((d) => d.id === "train-eng")!;
    const built = buildQuery(eng, { ...ENG_RAW, values: { ...ENG_RAW.values, m: "21000" } });
    const posted = await client.postQuery("rt-resume-1", built.query!);
    expect(posted.ok).toBe(true);

    const resumed = await client.replayEvents(seen);
    expect(resumed.events.length).toBeGreaterThan(0);
    expect(Math.min(...resumed.events.map((e) => e.seq))).toBe(seen + 1);
    feed.ingestAll(resumed.events);
    const seqs = feed.rows.map((e) => e.seq);
    expect(new Set(seqs).size).toBe(seqs.length);
  });

  it("surfaces a service rejection body verbatim", async () => {
    const result = await client.postQuery("rt-bad-1", {
      l: "train-eng",
      b: { m: { q: ["20000", "kg"] } },
    });
    expect(result.ok).toBe(false);
    if (result.ok) return;
    expect(result.status).toBe(400);
    const parsed = JSON.parse(result.body);
    expect(parsed.error.length).toBeGreaterThan(0);
  });
});
