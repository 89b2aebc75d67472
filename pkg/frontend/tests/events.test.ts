import { describe, expect, it } from "vitest";

import { parseEventLine, takeLines } from "../src/api.js";
import { EventFeed, renderEventRows, summarizeSubject } from "../src/events.js";
import type { ReuseEvent } from "../src/wire.js";

function ev(seq: number, extra: Partial<ReuseEvent> = {}): ReuseEvent {
  return {
    seq,
    ts: 1000 + seq,
    kind: "reuse",
    layer: "user",
    language: "train-eng",
    mechanism: "direct",
    subject: "{}",
    ...extra,
  };
}

describe("EventFeed", () => {
  it("tracks the highest sequence seen", () => {
    const feed = new EventFeed();
    expect(feed.ingestAll([ev(1), ev(2), ev(3)])).toBe(3);
    expect(feed.lastSeq).toBe(3);
    expect(feed.resumeFrom()).toBe(3);
  });

  it("drops replayed duplicates after a reconnect", () => {
    const feed = new EventFeed();
    feed.ingestAll([ev(1), ev(2), ev(3)]);
    // reconnect replays an overlapping window
    expect(feed.ingestAll([ev(2), ev(3), ev(4), ev(5)])).toBe(2);
    expect(feed.rows.map((e) => e.seq)).toEqual([1, 2, 3, 4, 5]);
  });

  it("caps the retained rows", () => {
    const feed = new EventFeed(2);
    feed.ingestAll([ev(1), ev(2), ev(3)]);
    expect(feed.rows.map((e) => e.seq)).toEqual([2, 3]);
    expect(feed.lastSeq).toBe(3);
  });
});

describe("ndjson plumbing", () => {
  it("splits complete lines and keeps the partial tail", () => {
    const first = takeLines('{"seq":1}\n{"seq"');
    expect(first.lines).toEqual(['{"seq":1}']);
    expect(first.rest).toBe('{"seq"');
    const second = takeLines(first.rest + ':2}\n');
    expect(second.lines).toEqual(['{"seq":2}']);
    expect(second.rest).toBe("");
  });

  it("parses event lines and rejects garbage", () => {
    const line =
      '{"seq":3,"ts":1755,"kind":"reuse","layer":"user","language":"train-eng","mechanism":"direct","subject":"{}","distance":0.0}';
    const parsed = parseEventLine(line);
    expect(parsed?.seq).toBe(3);
    expect(parsed?.distance).toBe(0);
    expect(parseEventLine("not json")).toBeNull();
    expect(parseEventLine('{"weird":true}')).toBeNull();
  });
});

describe("rendering", () => {
  it("summarizes a canonical subject into readable bindings", () => {
    const subject =
      '{"b":{"F_B":{"q":["0.09","1"]},"m":{"q":["20000","kg"]}},"l":"train-eng"}';
    const text = summarizeSubject(subject);
    expect(text).toContain("train-eng");
    expect(text).toContain("m=20000 kg");
    expect(text).toContain("F_B=0.09");
    expect(text).not.toContain('{"q"');
  });

  it("summarizes an execution subject with its kind", () => {
    const subject = '{"k":"Execute","l":"tms-run","p":{"Voltage":{"q":["400","V"]}}}';
    expect(summarizeSubject(subject)).toBe("Execute tms-run Voltage=400 V");
  });

  it("renders a distance cell only when the event carries one", () => {
    const withDistance = renderEventRows([ev(1, { distance: 0.4 })]);
    expect(withDistance).toContain("0.400");
    const without = renderEventRows([ev(2, { kind: "execute", mechanism: "executed" })]);
    expect(without).toContain("<td class=\"num\"></td>");
  });
});
