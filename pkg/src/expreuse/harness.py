"""Study harness: seeded scenario runs with delimited output and checks.

Each scenario builds a fresh engine, drives it from a seeded RNG, writes
one CSV under the output directory, and evaluates a list of named checks.
Everything in the CSVs except wall-clock latency columns is a pure
function of (scenario, seed, sizes), so re-running a scenario with the
same arguments reproduces the file byte for byte apart from those
columns.

A one-percent shadow sample of the answered queries is re-answered
through the store-free pipeline and compared against the engine's
answer. Answers settled by a fuzzy mechanism (retrieval or
recomputation) are approximations by design and are exempt; the counts
of checked, exempt, and mismatching samples land in the scenario report.
"""

from __future__ import annotations

import csv
import math
import os
import shutil
import time
from dataclasses import dataclass, field

import numpy as np

from . import battery as bt
from . import train as tr
from .engine import ProcessReport, ReuseEngine
from .languages import (
    LanguageRegistry,
    Query,
    canon_answer,
    query_key,
)
from .pipeline import run_pipeline
from .persist import open_store
from .store import ExperimentStore, MemoryTraceStore, NullTraceStore
from .values import BoxAxis, BoxConstraint, canon_dumps, fmt_real, real

SCENARIOS = ("rq1-battery", "rq1-train", "rq2-battery", "rq2-train")

# (label, t_Voltage, t_InternalRes, t_MaxTorque): proportional ladder of
# retrieval windows, loosest last
RQ1_BATTERY_THRESHOLDS = (
    ("tight", 0.5, 0.01, 0.5),
    ("unit", 1.0, 0.02, 1.0),
    ("double", 2.0, 0.03, 2.0),
    ("loose", 5.0, 0.05, 5.0),
)

# paper-scale sweep written as a box constraint; only counted, never run
PAPER_SCALE_BOX = BoxConstraint(
    axes=(
        BoxAxis("InternalRes", 0.02, 0.50, 0.01, closed=True),
        BoxAxis("MaxTorque", 400.0, 1000.0, 10.0, closed=False),
        BoxAxis("Voltage", 200.0, 600.0, 10.0, closed=False),
    )
)
PAPER_SCALE_POINTS = 117_600


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}" + (
            f": {self.detail}" if self.detail else ""
        )


@dataclass
class ScenarioReport:
    scenario: str
    seed: int
    csv_path: str
    figure_paths: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def summary(self) -> str:
        lines = [f"{self.scenario} (seed {self.seed}) -> {self.csv_path}"]
        lines += [c.line() for c in self.checks]
        return "\n".join(lines)


def _registry() -> LanguageRegistry:
    reg = LanguageRegistry()
    tr.register_train_languages(reg)
    bt.register_battery_languages(reg)
    return reg


def _write_csv(path: str, comments: list[str], header: list[str], rows: list[list]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


class ShadowSample:
    """Re-answers a seeded sample of queries without the store."""

    def __init__(self, registry: LanguageRegistry, rng: np.random.Generator, rate: float = 0.01):
        self.registry = registry
        self.rng = rng
        self.rate = rate
        self.checked = 0
        self.exempt = 0
        self.mismatches: list[str] = []

    def offer(self, q: Query, report: ProcessReport) -> None:
        if self.rng.random() >= self.rate:
            return
        if any("fuzzy" in k for k in report.reused):
            self.exempt += 1
            return
        self.checked += 1
        structure = self.registry.structure_for(q.language_id)
        fresh = run_pipeline(self.registry, structure, q).answer
        if canon_dumps(canon_answer(fresh)) != canon_dumps(canon_answer(report.answer)):
            self.mismatches.append(query_key(q))

    def check(self) -> Check:
        detail = f"{self.checked} replayed, {self.exempt} fuzzy-exempt, {len(self.mismatches)} mismatched"
        return Check("shadow sample agrees", not self.mismatches, detail)


# --- RQ1, battery domain -----------------------------------------------------

def _rq1_battery_grid() -> list[tuple[float, float, float]]:
    volts = [200.0 + i for i in range(10)]
    torques = [400.0 + i for i in range(10)]
    res = [0.02 + 0.12 * i for i in range(5)]
    return [(v, t, r) for v in volts for t in torques for r in res]


def _front_size(pairs) -> int:
    live = []
    for i, (_, rsp) in enumerate(pairs):
        if rsp.skipped:
            continue
        soc = real(rsp.values, "SoC")
        tbl = real(rsp.values, "TBL")
        if soc >= bt.UNSTABLE_SOC:
            live.append((soc, tbl, i))
    return len(bt.pareto_front(live))


def run_rq1_battery(
    seed: int = 0,
    out_dir: str = "results",
    repetitions: int = 3,
    figures: bool = True,
) -> ScenarioReport:
    """Executed-experiment counts across a ladder of retrieval windows.

    One grid, several threshold sets; each round explores the same 500
    configurations in a fresh random order against a fresh store, with
    only direct reuse and fuzzy retrieval enabled. Looser windows must
    strictly reduce the number of performed experiments.
    """
    registry = _registry()
    grid = _rq1_battery_grid()
    rows: list[list] = []
    executed_by_set: dict[str, list[int]] = {}
    master = np.random.default_rng(seed)
    order_seeds = master.integers(0, 2**63 - 1, size=(len(RQ1_BATTERY_THRESHOLDS), repetitions))

    for si, (label, t_v, t_r, t_t) in enumerate(RQ1_BATTERY_THRESHOLDS):
        executed_by_set[label] = []
        for round_ix in range(repetitions):
            store = ExperimentStore(trace_backend=NullTraceStore())
            engine = ReuseEngine(
                registry,
                store,
                [
                    bt.tms_request_scheme(
                        t_V=t_v,
                        t_T=t_t,
                        t_R=t_r,
                        justify_enabled=False,
                        recompute_enabled=False,
                    )
                ],
            )
            rng = np.random.default_rng(order_seeds[si][round_ix])
            order = rng.permutation(len(grid))
            executed = 0
            pairs = []
            for ix in order:
                v, t, r = grid[ix]
                rsp, ran = engine.answer_request(bt.tms_request(V=v, T=t, R=r))
                executed += ran
                pairs.append((None, rsp))
            front = _front_size(pairs)
            executed_by_set[label].append(executed)
            rows.append([label, fmt_real(t_v), fmt_real(t_r), fmt_real(t_t), round_ix, executed, front])

    csv_path = os.path.join(out_dir, "rq1_battery.csv")
    _write_csv(
        csv_path,
        [
            "executed experiments per retrieval-threshold set",
            f"seed={seed} repetitions={repetitions} grid={len(grid)} points",
        ],
        ["threshold_set", "t_voltage", "t_internal_res", "t_max_torque", "round", "executed", "front_size"],
        rows,
    )

    checks = []
    means = [sum(executed_by_set[l]) / repetitions for l, *_ in RQ1_BATTERY_THRESHOLDS]
    strictly_down = all(a > b for a, b in zip(means, means[1:]))
    checks.append(
        Check(
            "executed strictly decreases across threshold sets",
            strictly_down,
            " > ".join(f"{m:.1f}" for m in means),
        )
    )
    per_round_down = all(
        all(
            executed_by_set[RQ1_BATTERY_THRESHOLDS[i][0]][r]
            > executed_by_set[RQ1_BATTERY_THRESHOLDS[i + 1][0]][r]
            for i in range(len(RQ1_BATTERY_THRESHOLDS) - 1)
        )
        for r in range(repetitions)
    )
    checks.append(Check("decrease holds in every round", per_round_down))
    checks.append(
        Check(
            "tightest window runs the whole grid",
            all(e == len(grid) for e in executed_by_set[RQ1_BATTERY_THRESHOLDS[0][0]]),
        )
    )

    report = ScenarioReport(
        scenario="rq1-battery",
        seed=seed,
        csv_path=csv_path,
        checks=checks,
        metrics={"mean_executed": dict(zip([l for l, *_ in RQ1_BATTERY_THRESHOLDS], means))},
    )
    if figures:
        from .plots import rq1_battery_figure

        report.figure_paths.append(rq1_battery_figure(rows, out_dir))
    return report


# --- RQ1, train domain ---------------------------------------------------------

def run_rq1_train(
    seed: int = 0,
    out_dir: str = "results",
    n_queries: int = 5000,
    window: int = 500,
    figures: bool = True,
) -> ScenarioReport:
    """Executed-experiment ratio over a long randomized query stream.

    The full reuse stack answers a seeded stream of stopping-distance
    queries; the stream is replayed against a reuse-disabled engine as
    the baseline. Metadata-only storage keeps the run light: counts do
    not depend on trace payloads.
    """
    registry = _registry()
    rng = np.random.default_rng(seed)
    queries = tr.random_eng_queries(rng, n_queries)

    store = ExperimentStore(trace_backend=NullTraceStore())
    engine = ReuseEngine(registry, store, [tr.train_user_scheme()])
    shadow = ShadowSample(registry, np.random.default_rng(seed + 1))

    executed_flags: list[int] = []
    for q in queries:
        rep = engine.process(q)
        executed_flags.append(rep.executed)
        shadow.offer(q, rep)

    disabled_store = ExperimentStore(trace_backend=NullTraceStore())
    disabled = ReuseEngine(registry, disabled_store, [], reuse_enabled=False)
    disabled_executed = sum(disabled.process(q).executed for q in queries)

    rows = []
    cumulative = 0
    for start in range(0, n_queries, window):
        in_window = sum(executed_flags[start : start + window])
        cumulative += in_window
        size = min(window, n_queries - start)
        rows.append(
            [
                start,
                size,
                in_window,
                fmt_real(in_window / size),
                fmt_real(cumulative / (start + size)),
            ]
        )
    final_ratio = cumulative / n_queries
    first_ratio = sum(executed_flags[:window]) / window

    csv_path = os.path.join(out_dir, "rq1_train.csv")
    _write_csv(
        csv_path,
        [
            "windowed executed-experiment ratios, full reuse stack",
            f"seed={seed} queries={n_queries} window={window} baseline_executed={disabled_executed}",
        ],
        ["window_start", "window_size", "executed", "window_ratio", "cumulative_ratio"],
        rows,
    )

    reuse_counts = {
        k.split("/", 1)[1]: v
        for k, v in store.stats.reuse.items()
        if k.startswith("user/")
    }
    symbolic = reuse_counts.get("symbolic", 0)
    others = [v for k, v in reuse_counts.items() if k != "symbolic"]

    checks = [
        Check("final ratio under 0.6", final_ratio < 0.6, f"{final_ratio:.3f}"),
        Check(
            "final ratio below first window",
            final_ratio < first_ratio,
            f"{final_ratio:.3f} < {first_ratio:.3f}",
        ),
        Check("final ratio within [0.05, 0.6]", 0.05 <= final_ratio <= 0.6),
        Check(
            "reuse-disabled baseline executes everything",
            disabled_executed == n_queries,
            f"{disabled_executed}/{n_queries}",
        ),
        Check(
            "symbolic dominates the reuse mix",
            symbolic > 0 and all(symbolic > v for v in others),
            f"{reuse_counts}",
        ),
        shadow.check(),
    ]
    report = ScenarioReport(
        scenario="rq1-train",
        seed=seed,
        csv_path=csv_path,
        checks=checks,
        metrics={
            "final_ratio": final_ratio,
            "first_window_ratio": first_ratio,
            "reuse_counts": reuse_counts,
        },
    )
    if figures:
        from .plots import rq1_train_figure

        report.figure_paths.append(rq1_train_figure(rows, out_dir))
    return report


# --- RQ2, battery domain ---------------------------------------------------------

def _random_subbox_query(rng: np.random.Generator) -> Query:
    v0 = 200.0 + 20.0 * int(rng.integers(0, 11))
    t0 = 400.0 + 30.0 * int(rng.integers(0, 11))
    r0 = 0.02 + 0.032 * int(rng.integers(0, 6))
    return bt.sweep_query(
        {
            "Voltage": (v0, v0 + 20.0 * 9, 20.0),
            "MaxTorque": (t0, t0 + 30.0 * 9, 30.0),
            "InternalRes": (r0, r0 + 0.032 * 9, 0.032),
        }
    )


def run_rq2_battery(
    seed: int = 0,
    out_dir: str = "results",
    n_queries: int = 40,
    figures: bool = True,
) -> ScenarioReport:
    """Direct-reuse saturation over overlapping sweep queries.

    Sweeps over random 10x10x10 sub-boxes of a shared 6000-point lattice;
    every request identity lands exactly on lattice keys, so all savings
    come from direct hits. The paper-scale lattice is only counted.
    """
    assert PAPER_SCALE_BOX.point_count() == PAPER_SCALE_POINTS

    registry = _registry()
    rng = np.random.default_rng(seed)
    store = ExperimentStore(trace_backend=NullTraceStore())
    engine = ReuseEngine(
        registry,
        store,
        [
            bt.tms_request_scheme(
                justify_enabled=False, retrieval_enabled=False, recompute_enabled=False
            )
        ],
    )
    shadow = ShadowSample(registry, np.random.default_rng(seed + 1))

    rows = []
    executed_per_query: list[int] = []
    cumulative = 0
    for ix in range(n_queries):
        q = _random_subbox_query(rng)
        rep = engine.process(q)
        shadow.offer(q, rep)
        executed_per_query.append(rep.executed)
        cumulative += rep.executed
        rows.append([ix, rep.executed, cumulative, len(rep.fulfilments), store.stats.results])

    csv_path = os.path.join(out_dir, "rq2_battery.csv")
    lattice_points = 20 * 20 * 15
    _write_csv(
        csv_path,
        [
            "executed experiments per overlapping sub-box sweep (direct reuse only)",
            f"seed={seed} queries={n_queries} lattice_points={lattice_points}",
            f"paper_scale_points={PAPER_SCALE_POINTS} (counted from the set builder, not run)",
        ],
        ["query_index", "executed", "cumulative_executed", "grid_points", "stored_results"],
        rows,
    )

    knee = math.ceil(lattice_points / 1000)
    tail = executed_per_query[knee:]
    tail_mean = sum(tail) / len(tail)
    checks = [
        Check(
            "first sweep executes its whole grid",
            executed_per_query[0] == 1000,
            str(executed_per_query[0]),
        ),
        Check(
            f"mean executed after query {knee} under half the first",
            tail_mean < 0.5 * executed_per_query[0],
            f"{tail_mean:.1f} < {0.5 * executed_per_query[0]:.1f}",
        ),
        Check(
            "store never exceeds the lattice",
            store.stats.results <= lattice_points,
            f"{store.stats.results} <= {lattice_points}",
        ),
        shadow.check(),
    ]
    report = ScenarioReport(
        scenario="rq2-battery",
        seed=seed,
        csv_path=csv_path,
        checks=checks,
        metrics={"tail_mean": tail_mean, "stored_results": store.stats.results},
    )
    if figures:
        from .plots import rq2_battery_figure

        report.figure_paths.append(rq2_battery_figure(rows, out_dir))
    return report


# --- RQ2, train domain -----------------------------------------------------------

RQ2_TRAIN_CONFIGS = (
    "no-store",
    "metrics-reuse",
    "metrics-no-reuse",
    "traces-reuse",
    "traces-no-reuse",
)


def _rq2_train_engine(config: str, registry: LanguageRegistry, workdir: str) -> ReuseEngine:
    if config == "no-store":
        store = ExperimentStore(trace_backend=MemoryTraceStore())
        return ReuseEngine(registry, store, [], reuse_enabled=False, record=False)
    if config.startswith("metrics"):
        store = ExperimentStore(trace_backend=NullTraceStore())
    else:
        store = open_store(os.path.join(workdir, config))
    reuse = config.endswith("-reuse") and not config.endswith("-no-reuse")
    schemes = [tr.train_user_scheme()] if reuse else []
    return ReuseEngine(registry, store, schemes, reuse_enabled=reuse)


def run_rq2_train(
    seed: int = 0,
    out_dir: str = "results",
    n_queries: int = 2000,
    sample_every: int = 100,
    figures: bool = True,
) -> ScenarioReport:
    """Store growth and answer latency across five storage configurations.

    The same seeded stream of distinct queries runs against: no store at
    all, metadata-only stores with and without reuse, and trace-keeping
    file stores with and without reuse. Latency columns are wall-clock
    and excluded from reproducibility guarantees.
    """
    registry = _registry()
    rng = np.random.default_rng(seed)
    queries: list[Query] = []
    seen: set[str] = set()
    while len(queries) < n_queries:
        for q in tr.random_eng_queries(rng, n_queries - len(queries)):
            k = query_key(q)
            if k not in seen:
                seen.add(k)
                queries.append(q)

    workdir = os.path.join(out_dir, "rq2_train_stores")
    shutil.rmtree(workdir, ignore_errors=True)

    rows = []
    final: dict[str, dict] = {}
    for config in RQ2_TRAIN_CONFIGS:
        engine = _rq2_train_engine(config, registry, workdir)
        store = engine.store
        latency_sum = 0.0
        executed = 0
        for ix, q in enumerate(queries, start=1):
            t0 = time.perf_counter()
            rep = engine.process(q)
            latency_sum += time.perf_counter() - t0
            executed += rep.executed
            if ix % sample_every == 0 or ix == n_queries:
                size = store.stats.trace_bytes + store.stats.meta_bytes
                rows.append([config, ix, f"{latency_sum / ix:.6f}", size])
        disk = 0
        trace_disk = 0
        if config.startswith("traces"):
            store.close()
            d = os.path.join(workdir, config)
            disk = sum(os.path.getsize(os.path.join(d, f)) for f in os.listdir(d))
            trace_disk = os.path.getsize(os.path.join(d, "traces.bin"))
        final[config] = {
            "mean_latency": latency_sum / n_queries,
            "bytes": store.stats.trace_bytes + store.stats.meta_bytes,
            "disk_bytes": disk,
            "trace_disk_bytes": trace_disk,
            "executed": executed,
            "stats": store.stats.to_dict(),
        }

    csv_path = os.path.join(out_dir, "rq2_train.csv")
    _write_csv(
        csv_path,
        [
            "store growth and mean answer latency per storage configuration",
            f"seed={seed} queries={n_queries} (latency column is wall-clock, not reproducible)",
        ],
        ["config", "query_index", "mean_latency_s", "store_bytes"],
        rows,
    )

    ns = final["no-store"]
    mr, mnr = final["metrics-reuse"], final["metrics-no-reuse"]
    tr_, tnr = final["traces-reuse"], final["traces-no-reuse"]
    stats_ns = ns["stats"]
    empty = all(
        stats_ns[k] == 0
        for k in ("answers", "responses", "results", "links", "executed_total", "trace_bytes", "meta_bytes")
    )
    checks = [
        Check("no-store keeps nothing", empty and ns["bytes"] == 0, str(stats_ns)),
        Check(
            "metadata stores grow less than trace stores",
            mr["bytes"] < tr_["bytes"] and mnr["bytes"] < tnr["bytes"],
            f"{mr['bytes']} < {tr_['bytes']}, {mnr['bytes']} < {tnr['bytes']}",
        ),
        Check(
            "reuse shrinks the trace store",
            tr_["trace_disk_bytes"] < tnr["trace_disk_bytes"],
            f"{tr_['trace_disk_bytes']} < {tnr['trace_disk_bytes']}",
        ),
        Check(
            "reuse stores no more metadata than no-reuse",
            mr["bytes"] <= mnr["bytes"],
            f"{mr['bytes']} <= {mnr['bytes']}",
        ),
        Check(
            "bookkeeping does not speed answering up",
            mnr["mean_latency"] >= 0.95 * ns["mean_latency"],
            f"{mnr['mean_latency']:.6f} vs {ns['mean_latency']:.6f}",
        ),
        Check(
            "reuse executes fewer experiments",
            tr_["executed"] < tnr["executed"] and mr["executed"] < mnr["executed"],
            f"{tr_['executed']} < {tnr['executed']}",
        ),
    ]
    report = ScenarioReport(
        scenario="rq2-train",
        seed=seed,
        csv_path=csv_path,
        checks=checks,
        metrics={k: {kk: vv for kk, vv in v.items() if kk != "stats"} for k, v in final.items()},
    )
    if figures:
        from .plots import rq2_train_figure

        report.figure_paths.append(rq2_train_figure(rows, out_dir))
    return report


def run_scenario(name: str, seed: int = 0, out_dir: str = "results", figures: bool = True, **kw) -> ScenarioReport:
    if name == "rq1-battery":
        return run_rq1_battery(seed=seed, out_dir=out_dir, figures=figures, **kw)
    if name == "rq1-train":
        return run_rq1_train(seed=seed, out_dir=out_dir, figures=figures, **kw)
    if name == "rq2-battery":
        return run_rq2_battery(seed=seed, out_dir=out_dir, figures=figures, **kw)
    if name == "rq2-train":
        return run_rq2_train(seed=seed, out_dir=out_dir, figures=figures, **kw)
    raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
