"""Figure rendering for the scenario CSV rows.

Kept separate from the harness so headless runs can skip matplotlib
entirely. All figures are written as PNG files next to the CSVs.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _finish(fig, out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def rq1_battery_figure(rows: list[list], out_dir: str) -> str:
    # rows: threshold_set, t_v, t_r, t_t, round, executed, front_size
    sets: dict[str, list[int]] = {}
    for label, _tv, _tr, _tt, _round, executed, _front in rows:
        sets.setdefault(label, []).append(int(executed))
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = list(sets)
    means = [sum(v) / len(v) for v in sets.values()]
    ax.bar(labels, means, color="#4878a8")
    for i, (label, values) in enumerate(sets.items()):
        ax.scatter([i] * len(values), values, color="#222222", zorder=3, s=12)
    ax.set_xlabel("retrieval threshold set")
    ax.set_ylabel("executed experiments")
    ax.set_title("wider retrieval windows run fewer experiments")
    return _finish(fig, out_dir, "rq1_battery.png")


def rq1_train_figure(rows: list[list], out_dir: str) -> str:
    # rows: window_start, window_size, executed, window_ratio, cumulative_ratio
    xs = [int(r[0]) + int(r[1]) for r in rows]
    window = [float(r[3]) for r in rows]
    cumulative = [float(r[4]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, window, marker="o", label="per-window ratio", color="#4878a8")
    ax.plot(xs, cumulative, marker=".", label="cumulative ratio", color="#a85448")
    ax.axhline(1.0, linestyle="--", color="#888888", label="no reuse")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("queries answered")
    ax.set_ylabel("executed / queries")
    ax.set_title("executed-experiment ratio over the query stream")
    ax.legend()
    return _finish(fig, out_dir, "rq1_train.png")


def rq2_battery_figure(rows: list[list], out_dir: str) -> str:
    # rows: query_index, executed, cumulative_executed, grid_points, stored_results
    xs = [int(r[0]) for r in rows]
    executed = [int(r[1]) for r in rows]
    stored = [int(r[4]) for r in rows]
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax.plot(xs, executed, marker="o", color="#4878a8")
    ax.set_xlabel("sweep query index")
    ax.set_ylabel("executed experiments")
    ax.set_title("overlap turns into direct reuse")
    ax2.plot(xs, stored, color="#a85448")
    ax2.set_xlabel("sweep query index")
    ax2.set_ylabel("stored results")
    ax2.set_title("store saturates at the lattice")
    return _finish(fig, out_dir, "rq2_battery.png")


def rq2_train_figure(rows: list[list], out_dir: str) -> str:
    # rows: config, query_index, mean_latency_s, store_bytes
    by_config: dict[str, tuple[list[int], list[float], list[int]]] = {}
    for config, ix, lat, size in rows:
        xs, lats, sizes = by_config.setdefault(config, ([], [], []))
        xs.append(int(ix))
        lats.append(float(lat))
        sizes.append(int(size))
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for config, (xs, lats, sizes) in by_config.items():
        ax.plot(xs, [s / 1e6 for s in sizes], label=config)
        ax2.plot(xs, [l * 1e3 for l in lats], label=config)
    ax.set_xlabel("queries answered")
    ax.set_ylabel("store size (MB)")
    ax.set_title("store growth by configuration")
    ax.legend(fontsize=8)
    ax2.set_xlabel("queries answered")
    ax2.set_ylabel("mean answer latency (ms)")
    ax2.set_title("latency by configuration")
    ax2.legend(fontsize=8)
    return _finish(fig, out_dir, "rq2_train.png")
