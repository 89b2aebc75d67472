"""Study harness: small-size runs, reproducibility, and the CLI wrapper."""

import csv
import os

import numpy as np

from expreuse.cli import main
from expreuse.engine import ReuseEngine
from expreuse.harness import (
    PAPER_SCALE_POINTS,
    ShadowSample,
    run_rq1_battery,
    run_rq1_train,
    run_rq2_battery,
    run_rq2_train,
    run_scenario,
)
from expreuse.store import ExperimentStore, MemoryTraceStore
from expreuse.train import random_eng_queries, train_user_scheme


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_paper_scale_grid_count():
    assert PAPER_SCALE_POINTS == 117_600


def test_rq1_battery_small(tmp_path):
    report = run_rq1_battery(seed=7, out_dir=str(tmp_path), repetitions=1, figures=False)
    assert report.ok, report.summary()
    assert os.path.exists(report.csv_path)
    assert report.figure_paths == []
    # looser thresholds must run strictly fewer experiments
    means = list(report.metrics["mean_executed"].values())
    assert all(a > b for a, b in zip(means, means[1:]))


def test_rq1_battery_reproducible(tmp_path):
    a = run_rq1_battery(seed=3, out_dir=str(tmp_path / "a"), repetitions=1, figures=False)
    b = run_rq1_battery(seed=3, out_dir=str(tmp_path / "b"), repetitions=1, figures=False)
    assert _read(a.csv_path) == _read(b.csv_path)
    c = run_rq1_battery(seed=4, out_dir=str(tmp_path / "c"), repetitions=1, figures=False)
    assert _read(a.csv_path) != _read(c.csv_path)


def test_rq1_train_small(tmp_path):
    report = run_rq1_train(seed=5, out_dir=str(tmp_path), n_queries=1500, window=300, figures=False)
    assert report.ok, report.summary()
    rows = list(csv.reader(ln for ln in open(report.csv_path) if not ln.startswith("#")))
    header, body = rows[0], rows[1:]
    assert header[:3] == ["window_start", "window_size", "executed"]
    assert len(body) == 1500 // 300


def test_rq1_train_reproducible(tmp_path):
    a = run_rq1_train(seed=9, out_dir=str(tmp_path / "a"), n_queries=900, window=300, figures=False)
    b = run_rq1_train(seed=9, out_dir=str(tmp_path / "b"), n_queries=900, window=300, figures=False)
    assert _read(a.csv_path) == _read(b.csv_path)


def test_rq2_battery_small(tmp_path):
    report = run_rq2_battery(seed=3, out_dir=str(tmp_path), n_queries=12, figures=False)
    assert report.ok, report.summary()
    a = run_rq2_battery(seed=3, out_dir=str(tmp_path / "again"), n_queries=12, figures=False)
    assert _read(a.csv_path) == _read(report.csv_path)


def test_rq2_train_small(tmp_path):
    report = run_rq2_train(seed=11, out_dir=str(tmp_path), n_queries=300, sample_every=50, figures=False)
    assert report.ok, report.summary()


def test_rq2_train_reproducible_except_latency(tmp_path):
    a = run_rq2_train(seed=2, out_dir=str(tmp_path / "a"), n_queries=200, sample_every=50, figures=False)
    b = run_rq2_train(seed=2, out_dir=str(tmp_path / "b"), n_queries=200, sample_every=50, figures=False)

    def stripped(path):
        rows = list(csv.reader(ln for ln in open(path) if not ln.startswith("#")))
        drop = [i for i, name in enumerate(rows[0]) if "latency" in name]
        return [[c for i, c in enumerate(row) if i not in drop] for row in rows]

    assert stripped(a.csv_path) == stripped(b.csv_path)


def test_shadow_sample_full_rate(registry):
    store = ExperimentStore(trace_backend=MemoryTraceStore())
    engine = ReuseEngine(registry, store, [train_user_scheme()])
    shadow = ShadowSample(registry, np.random.default_rng(0), rate=1.0)
    for q in random_eng_queries(np.random.default_rng(1), 30):
        shadow.offer(q, engine.process(q))
    check = shadow.check()
    assert check.ok, check.detail
    assert shadow.checked > 0


def test_figures_are_rendered(tmp_path):
    report = run_rq1_train(seed=5, out_dir=str(tmp_path), n_queries=600, window=300, figures=True)
    assert report.figure_paths
    for path in report.figure_paths:
        assert path.endswith(".png") and os.path.getsize(path) > 0


def test_run_scenario_dispatch(tmp_path):
    report = run_scenario("rq1-train", seed=5, out_dir=str(tmp_path), figures=False, n_queries=600, window=300)
    assert report.scenario == "rq1-train"
    assert report.ok


def test_cli_runs_a_scenario(tmp_path, capsys):
    code = main(
        [
            "rq1-train",
            "--seed",
            "5",
            "--out",
            str(tmp_path),
            "--queries",
            "600",
            "--window",
            "300",
            "--no-figures",
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "[PASS]" in out and "[FAIL]" not in out


def test_cli_serve_is_wired():
    # the serve subcommand parses without starting anything here
    from expreuse.cli import build_parser

    args = build_parser().parse_args(["serve", "--port", "9000"])
    assert args.command == "serve"
    assert args.port == 9000
