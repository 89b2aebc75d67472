/** Wire fixtures captured from a live service. */

import type { LanguageDescriptor, QueryEnvelope, StatsSnapshot } from "../src/wire.js";

export const ENG_DESC: LanguageDescriptor = {
  id: "train-eng",
  variables: {
    F_B: { kind: "real", unit: "1", lo: 0.0, hi: 1000.0 },
    dist: { kind: "real", unit: "m", lo: 0.0, hi: 1000000.0 },
    m: { kind: "real", unit: "kg", lo: 1.0, hi: 1000000.0 },
    mu: { kind: "real", unit: "1", lo: 0.0, hi: 1.5 },
    theta: { kind: "real", unit: "deg", lo: -30.0, hi: 30.0 },
    v: { kind: "real", unit: "km/h", lo: 0.0, hi: 500.0 },
  },
  schemes: [["F_B", "dist", "m", "mu", "theta", "v"]],
  answer: { kind: "bool" },
  request: { id: "train-stop", poiVars: ["stopDist"] },
};

export const SALE_DESC: LanguageDescriptor = {
  id: "train-sale",
  variables: {
    situation: { kind: "symbol", members: ["mountain-grade", "wet-valley"], star: false },
    train: { kind: "symbol", members: ["freight-20000", "regional-1500", "shunter-800"], star: false },
  },
  schemes: [["situation", "train"], ["train"]],
  answer: { kind: "bool" },
  request: { id: "train-stop", poiVars: ["stopDist"] },
};

export const TMS_DESC: LanguageDescriptor = {
  id: "tms-sweep",
  variables: {
    Constr: { kind: "box", axisVars: ["InternalRes", "MaxTorque", "Voltage"] },
    InternalRes: { kind: "real", unit: "ohm", lo: 0.0, hi: 5.0 },
    MaxTorque: { kind: "real", unit: "Nm", lo: 50.0, hi: 5000.0 },
    Voltage: { kind: "real", unit: "V", lo: 50.0, hi: 2000.0 },
    stim: { kind: "profile" },
  },
  schemes: [
    ["Constr", "InternalRes", "MaxTorque", "stim"],
    ["Constr", "InternalRes", "Voltage", "stim"],
    ["Constr", "InternalRes", "stim"],
    ["Constr", "MaxTorque", "Voltage", "stim"],
    ["Constr", "MaxTorque", "stim"],
    ["Constr", "Voltage", "stim"],
    ["Constr", "stim"],
    ["InternalRes", "MaxTorque", "Voltage", "stim"],
  ],
  answer: { kind: "front", pointVars: ["InternalRes", "MaxTorque", "SoC", "TBL", "Voltage"] },
  request: { id: "tms-sim", poiVars: ["SoC", "TBL"] },
};

export const TMS_SET_ELEMENTS = [
  '{"InternalRes":{"q":["0.05","ohm"]},"MaxTorque":{"q":["800","Nm"]},"SoC":{"q":["74.5390625","%"]},"TBL":{"q":["1659375","J"]},"Voltage":{"q":["400","V"]}}',
  '{"InternalRes":{"q":["0.05","ohm"]},"MaxTorque":{"q":["900","Nm"]},"SoC":{"q":["74.5390625","%"]},"TBL":{"q":["1659375","J"]},"Voltage":{"q":["400","V"]}}',
];

export const TMS_ENVELOPE: QueryEnvelope = {
  requestId: "fx-tms-1",
  queryKey: "",
  answer: { set: TMS_SET_ELEMENTS, all_skipped: false },
  executed: 4,
  reused: {},
  mechanism: "executed",
  events: { first: 4, last: 8 },
};

export const ENG_ENVELOPE: QueryEnvelope = {
  requestId: "fx-eng-1",
  queryKey: "",
  answer: { b: true },
  executed: 0,
  reused: { "user/direct": 1 },
  mechanism: "direct",
  events: { first: 3, last: 3 },
};

export function zeroStats(): StatsSnapshot {
  return {
    store: {
      answers: 0,
      responses: 0,
      results: 0,
      links: 0,
      executed_total: 0,
      trace_bytes: 0,
      meta_bytes: 0,
      purged_total: 0,
      reuse: {},
    },
    events: 0,
    uptimeS: 1.0,
    languages: ["tms-sweep", "train-eng", "train-sale"],
  };
}
