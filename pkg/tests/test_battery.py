"""Thermal sweep domain: surrogate oracles, then grids, skips, and rebuilds."""

import numpy as np
import pytest

from expreuse.battery import (
    CAPACITY_J,
    OMEGA,
    QL_SWEEP,
    STANDARD_CYCLE,
    UNSTABLE_SOC,
    batch_metrics,
    battery_justify,
    battery_recompute,
    cycle_power,
    derive_series,
    final_metrics,
    load_drive_cycle_csv,
    register_drive_cycle,
    simulate_thermal,
    sweep_query,
    tms_request,
)
from expreuse.errors import (
    EmptyDecomposition,
    EmptyResults,
    ExecutionFailure,
    InvalidLayout,
)
from expreuse.languages import BindingSet, ExperimentResult, TraceSeries
from expreuse.pipeline import run_pipeline
from expreuse.values import Quantity, bind, binding_vars, real


# --- surrogate oracle --------------------------------------------------------


def test_lossless_anchor():
    # T = 800 Nm covers the 80 kW demand peak at omega = 100 and R = 0 kills
    # the ohmic term, so the pack only pays the demand itself: six full sine
    # periods of mean 50 kW over 1800 s is a quarter of the capacity.
    soc, tbl = final_metrics(simulate_thermal(300, 800, 0.0, STANDARD_CYCLE))
    assert soc == pytest.approx(75.0)
    assert tbl == 0.0


def test_unstable_anchor():
    soc, _ = final_metrics(simulate_thermal(206, 450, 0.45, STANDARD_CYCLE))
    assert soc == pytest.approx(47.1769, abs=1e-3)
    assert soc < UNSTABLE_SOC


def test_series_match_direct_arithmetic(rng):
    P = cycle_power(STANDARD_CYCLE)
    for _ in range(20):
        V = float(rng.uniform(200, 600))
        T = float(rng.uniform(400, 1000))
        R = float(rng.uniform(0.0, 0.5))
        soc, tbl = derive_series(P, V, T, R)
        losses = (P / V) ** 2 * R + 2.0 * np.maximum(P / OMEGA - T, 0.0) * OMEGA
        assert tbl[-1] == pytest.approx(float(np.sum(losses)), rel=1e-12)
        consumed = float(np.sum(P + losses))
        assert soc[-1] == pytest.approx(100.0 * (1.0 - consumed / CAPACITY_J), rel=1e-12)


def test_metric_monotone_directions(rng):
    for _ in range(50):
        V = float(rng.uniform(200, 600))
        T = float(rng.uniform(400, 1000))
        R = float(rng.uniform(0.0, 0.5))
        soc, tbl = final_metrics(simulate_thermal(V, T, R, STANDARD_CYCLE))
        up_v = final_metrics(simulate_thermal(V + 10, T, R, STANDARD_CYCLE))
        up_t = final_metrics(simulate_thermal(V, T + 20, R, STANDARD_CYCLE))
        up_r = final_metrics(simulate_thermal(V, T, R + 0.05, STANDARD_CYCLE))
        assert up_v[0] >= soc and up_v[1] <= tbl
        assert up_t[0] >= soc and up_t[1] <= tbl
        assert up_r[0] <= soc and up_r[1] >= tbl


def test_batch_matches_single_runs(rng):
    V = rng.uniform(200, 600, size=30)
    T = rng.uniform(400, 1000, size=30)
    R = rng.uniform(0.0, 0.5, size=30)
    soc, tbl = batch_metrics(V, T, R, STANDARD_CYCLE, chunk=7)
    for i in range(30):
        s, b = final_metrics(simulate_thermal(V[i], T[i], R[i], STANDARD_CYCLE))
        assert soc[i] == pytest.approx(s, rel=1e-9)
        assert tbl[i] == pytest.approx(b, rel=1e-9, abs=1e-6)


def test_simulated_traces_shape():
    result = simulate_thermal(300, 800, 0.1, STANDARD_CYCLE)
    assert set(result.traces) == {"P", "SoC", "TBL"}
    assert result.dt == 1.0
    for series in result.traces.values():
        assert len(series.values) == 1800
        assert series.times[0] == 0.0 and series.times[-1] == 1799.0
    soc, tbl = final_metrics(result)
    assert soc == result.traces["SoC"].values[-1]
    assert tbl == result.traces["TBL"].values[-1]


# --- drive cycles --------------------------------------------------------------


def test_cycle_registration_rejects_bad_series():
    with pytest.raises(InvalidLayout):
        register_drive_cycle("empty", [])
    with pytest.raises(InvalidLayout):
        register_drive_cycle("negative", [100.0, -1.0])


def test_cycle_csv_loading(tmp_path):
    single = tmp_path / "city.csv"
    single.write_text("# demand in W\n1000\n2000\n1500\n")
    ref = load_drive_cycle_csv(str(single))
    assert ref.profile_id == "city"
    assert list(cycle_power("city")) == [1000.0, 2000.0, 1500.0]

    pairs = tmp_path / "hill.csv"
    pairs.write_text("0,500\n1,600\n")
    load_drive_cycle_csv(str(pairs), profile_id="hill-run")
    assert list(cycle_power("hill-run")) == [500.0, 600.0]

    bad = tmp_path / "bad.csv"
    bad.write_text("1000\noops\n")
    with pytest.raises(InvalidLayout):
        load_drive_cycle_csv(str(bad))


def test_unknown_cycle_fails_at_execution():
    with pytest.raises(ExecutionFailure):
        cycle_power("no-such-cycle")


# --- sweep pipeline --------------------------------------------------------------


def _small_sweep():
    return sweep_query(
        axes={
            "Voltage": (300.0, 302.0, 1.0),
            "MaxTorque": (800.0, 900.0, 50.0),
            "InternalRes": (0.0, 0.1, 0.1),
        }
    )


def test_sweep_pipeline_matches_the_naive_front(registry):
    q = _small_sweep()
    structure = registry.structure_for(QL_SWEEP)
    run = run_pipeline(registry, structure, q)
    assert run.executed == 3 * 3 * 2
    assert isinstance(run.answer, BindingSet)
    assert not run.answer.all_skipped
    assert len(run.answer.points) >= 1
    assert structure.answered_by(q, run.answer)


def test_sweep_ground_truth_rejects_tampering(registry):
    q = _small_sweep()
    structure = registry.structure_for(QL_SWEEP)
    answer = run_pipeline(registry, structure, q).answer
    assert not structure.answered_by(q, BindingSet(points=answer.points[:-1], all_skipped=False))
    d = dict(answer.points[0])
    d["SoC"] = Quantity(d["SoC"].value + 0.001, "%")
    forged = (bind(d),) + answer.points[1:]
    assert not structure.answered_by(q, BindingSet(points=forged, all_skipped=False))
    assert not structure.answered_by(q, True)  # wrong answer shape entirely


def test_fixed_vars_shrink_the_grid(registry):
    q = sweep_query(axes={"Voltage": (300.0, 304.0, 1.0)}, MaxTorque=800.0, InternalRes=0.1)
    structure = registry.structure_for(QL_SWEEP)
    requests = structure.decompose(q)
    assert len(requests) == 5
    assert {real(r.binding, "MaxTorque") for r in requests} == {800.0}


def test_sweep_grid_validation(registry):
    structure = registry.structure_for(QL_SWEEP)
    with pytest.raises(EmptyDecomposition):
        structure.decompose(sweep_query(axes={}, Voltage=300.0))  # T, R unconstrained
    with pytest.raises(EmptyDecomposition):
        structure.decompose(
            sweep_query(
                axes={"Voltage": (300.0, 302.0, 1.0)},
                Voltage=300.0,
                MaxTorque=800.0,
                InternalRes=0.1,
            )
        )


# --- compute ---------------------------------------------------------------------


def test_compute_binds_exactly_the_requested_vars(registry):
    structure = registry.structure_for(QL_SWEEP)
    for poi in ({"SoC"}, {"TBL"}, {"SoC", "TBL"}):
        request = tms_request(300, 800, 0.1, poi=poi)
        specs = structure.complete(request)
        result = structure.execute(specs[-1])
        rsp = structure.compute(request, [result])
        assert binding_vars(rsp.values) == frozenset(poi)
        assert not rsp.skipped


def test_compute_rejects_an_empty_run(registry):
    structure = registry.structure_for(QL_SWEEP)
    request = tms_request(300, 800, 0.1)
    with pytest.raises(EmptyResults):
        structure.compute(request, [ExperimentResult(traces={}, dt=1.0)])
    empty = ExperimentResult(
        traces={"SoC": TraceSeries(times=np.empty(0), values=np.empty(0))}, dt=1.0
    )
    with pytest.raises(EmptyResults):
        structure.compute(request, [empty])


# --- exclusion by dominance --------------------------------------------------------


def _computed_response(registry, request):
    structure = registry.structure_for(QL_SWEEP)
    result = structure.execute(structure.complete(request)[-1])
    return structure.compute(request, [result])


def test_justify_skips_configs_dominated_by_an_unstable_one(registry):
    stored = tms_request(206, 450, 0.45)
    stored_rsp = _computed_response(registry, stored)
    new = tms_request(200, 440, 0.5, poi=("SoC", "TBL"))
    skip = battery_justify(stored, stored_rsp, new, [])
    assert skip is not None and skip.skipped
    assert binding_vars(skip.values) == frozenset({"SoC", "TBL"})
    # stored metrics are carried into the skip verdict where available
    assert real(skip.values, "SoC") == real(stored_rsp.values, "SoC")
    assert real(skip.values, "TBL") == real(stored_rsp.values, "TBL")


def test_justify_rebinds_onto_the_new_poi(registry):
    stored = tms_request(206, 450, 0.45, poi=("SoC",))
    stored_rsp = _computed_response(registry, stored)
    skip = battery_justify(stored, stored_rsp, tms_request(200, 440, 0.5, poi=("TBL",)), [])
    assert skip is not None and binding_vars(skip.values) == frozenset({"TBL"})
    # the stored run never measured loss; a deterministic stand-in fills in
    assert real(skip.values, "TBL") == CAPACITY_J


def test_justify_refuses_without_a_charge_reading(registry):
    stored = tms_request(206, 450, 0.45, poi=("TBL",))
    stored_rsp = _computed_response(registry, stored)
    assert battery_justify(stored, stored_rsp, tms_request(200, 440, 0.5), []) is None


def test_justify_refuses_stable_or_incomparable_sources(registry):
    stable = tms_request(300, 800, 0.0)
    stable_rsp = _computed_response(registry, stable)
    assert battery_justify(stable, stable_rsp, tms_request(250, 700, 0.1), []) is None

    unstable = tms_request(206, 450, 0.45)
    unstable_rsp = _computed_response(registry, unstable)
    better = tms_request(300, 450, 0.45)  # more voltage than the stored config
    assert battery_justify(unstable, unstable_rsp, better, []) is None


def test_justify_requires_the_same_demand_cycle(registry):
    register_drive_cycle("gentle", [1000.0] * 10)
    stored = tms_request(206, 450, 0.45)
    stored_rsp = _computed_response(registry, stored)
    other = tms_request(200, 440, 0.5, stim="gentle")
    assert battery_justify(stored, stored_rsp, other, []) is None


def test_justify_chains_from_an_earlier_skip(registry):
    stored = tms_request(206, 450, 0.45)
    stored_rsp = _computed_response(registry, stored)
    first = battery_justify(stored, stored_rsp, tms_request(200, 440, 0.5), [])
    chained = battery_justify(
        tms_request(200, 440, 0.5), first, tms_request(195, 430, 0.6), []
    )
    assert chained is not None and chained.skipped


# --- recomputation -----------------------------------------------------------------


def test_recompute_matches_a_fresh_run(registry):
    structure = registry.structure_for(QL_SWEEP)
    stored = tms_request(206, 450, 0.45)
    result = structure.execute(structure.complete(stored)[-1])
    new = tms_request(210, 460, 0.4, poi=("SoC",))
    rebuilt = battery_recompute(stored, None, new, [result])
    assert rebuilt is not None
    assert binding_vars(rebuilt.values) == frozenset({"SoC"})
    fresh, _ = final_metrics(simulate_thermal(210, 460, 0.4, STANDARD_CYCLE))
    assert real(rebuilt.values, "SoC") == pytest.approx(fresh, rel=1e-12)


def test_recompute_needs_a_demand_trace(registry):
    stored = tms_request(206, 450, 0.45)
    new = tms_request(210, 460, 0.4)
    assert battery_recompute(stored, None, new, []) is None
    no_demand = ExperimentResult(traces={}, dt=1.0)
    assert battery_recompute(stored, None, new, [no_demand]) is None
    register_drive_cycle("gentle-2", [1000.0] * 10)
    structure = registry.structure_for(QL_SWEEP)
    result = structure.execute(structure.complete(stored)[-1])
    assert battery_recompute(stored, None, tms_request(210, 460, 0.4, stim="gentle-2"), [result]) is None
