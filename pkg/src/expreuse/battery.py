"""Battery thermal domain: state-of-charge studies under a drive cycle.

Surrogate: a drive cycle demands electrical power P(t) at one-second
resolution. The pack at voltage V sees current I = P / V and loses
I^2 * R ohmically; demanding torque above the machine limit T at fixed
speed omega adds an overload penalty 2 * max(0, P/omega - T) * omega.
Consumed energy accumulates P plus losses; state of charge is the
remaining fraction of a 100 kWh pack, total battery loss the accumulated
loss energy. Both are monotone along the run (power demand is positive),
so the final sample is also the worst one. A configuration is unstable
when its final state of charge falls under 50 percent.

The sweep query language asks for the viable trade-off front over a box
of configurations: maximize state of charge, minimize loss. Unstable
configurations are excluded; the decomposition-layer justification rule
lets a stored unstable (or already excluded) configuration exclude any
configuration that is weaker on every axis, without running it.
"""

from __future__ import annotations

import itertools
import math
import zlib
from typing import Iterable

import numpy as np

from .errors import (
    DomainViolation,
    EmptyDecomposition,
    EmptyResults,
    ExecutionFailure,
    InvalidLayout,
)
from .languages import (
    BindingSet,
    BindingSetAnswerDomain,
    ExperimentResult,
    ExperimentSpec,
    LanguageRegistry,
    LanguageStructure,
    Query,
    QueryLanguage,
    Request,
    RequestLanguage,
    Response,
    SpecLanguage,
    TraceSeries,
    request_key,
)
from .reasoning import (
    EVIDENCE_RESULTS,
    LAYER_DECOMPOSITION,
    ReasoningScheme,
)
from .values import (
    BoxConstraint,
    BoxDomain,
    ProfileDomain,
    ProfileRef,
    Quantity,
    RealDomain,
    bind,
    binding_get,
    binding_vars,
    real,
)

OMEGA = 100.0  # electrical machine speed, rad/s, held constant
CAPACITY_J = 3.6e8  # 100 kWh pack
DT = 1.0
UNSTABLE_SOC = 50.0

QL_SWEEP = "tms-sweep"
RL_TMS = "tms-sim"
SL_TMS = "tms-run"

AXIS_VARS = ("InternalRes", "MaxTorque", "Voltage")  # sorted; grid order
STANDARD_CYCLE = "standard-drive-cycle"

_UNITS = {"Voltage": "V", "MaxTorque": "Nm", "InternalRes": "ohm"}


# --- drive cycles ---------------------------------------------------------------

_cycles: dict[str, np.ndarray] = {}


def register_drive_cycle(profile_id: str, powers: Iterable[float]) -> ProfileRef:
    arr = np.asarray(list(powers), dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise InvalidLayout(f"drive cycle {profile_id}: expected a 1-d power series")
    if not np.all(arr > 0.0):
        raise InvalidLayout(f"drive cycle {profile_id}: power demand must stay positive")
    _cycles[profile_id] = arr
    return ProfileRef(profile_id)


def load_drive_cycle_csv(path: str, profile_id: str | None = None) -> ProfileRef:
    """One power sample per line (a single column, or t,P pairs at 1 s)."""
    import csv
    import os

    name = profile_id or os.path.splitext(os.path.basename(path))[0]
    powers: list[float] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                powers.append(float(row[-1]))
            except ValueError:
                raise InvalidLayout(f"{path}: non-numeric power sample {row!r}") from None
    return register_drive_cycle(name, powers)


def cycle_power(profile_id: str) -> np.ndarray:
    try:
        return _cycles[profile_id]
    except KeyError:
        raise ExecutionFailure(f"unknown drive cycle {profile_id!r}") from None


def _standard_cycle() -> np.ndarray:
    t = np.arange(1800, dtype=float)
    return 50_000.0 + 30_000.0 * np.sin(2.0 * math.pi * t / 300.0)


register_drive_cycle(STANDARD_CYCLE, _standard_cycle())


# --- surrogate ------------------------------------------------------------------

def derive_series(P: np.ndarray, V: float, T: float, R: float) -> tuple[np.ndarray, np.ndarray]:
    """(state-of-charge series, total-loss series) for one configuration."""
    I = P / V
    losses = I * I * R + 2.0 * np.maximum(P / OMEGA - T, 0.0) * OMEGA
    consumed = np.cumsum((P + losses) * DT)
    soc = 100.0 * (1.0 - consumed / CAPACITY_J)
    tbl = np.cumsum(losses * DT)
    return soc, tbl


def simulate_thermal(V: float, T: float, R: float, profile_id: str) -> ExperimentResult:
    P = cycle_power(profile_id)
    soc, tbl = derive_series(P, V, T, R)
    times = np.arange(len(P), dtype=float) * DT
    return ExperimentResult(
        traces={
            "P": TraceSeries(times=times, values=P.astype(float)),
            "SoC": TraceSeries(times=times, values=soc),
            "TBL": TraceSeries(times=times, values=tbl),
        },
        dt=DT,
    )


def final_metrics(result: ExperimentResult) -> tuple[float, float]:
    """Final (and, by monotonicity, worst) state of charge plus total loss."""
    return result.traces["SoC"].final(), result.traces["TBL"].final()


def batch_metrics(
    V: np.ndarray, T: np.ndarray, R: np.ndarray, profile_id: str, chunk: int = 512
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized final metrics for many configurations at once."""
    P = cycle_power(profile_id)
    V, T, R = (np.asarray(x, dtype=float) for x in (V, T, R))
    soc = np.empty(len(V))
    tbl = np.empty(len(V))
    for lo in range(0, len(V), chunk):
        hi = min(lo + chunk, len(V))
        Pm = P[None, :]
        I = Pm / V[lo:hi, None]
        losses = I * I * R[lo:hi, None] + 2.0 * np.maximum(Pm / OMEGA - T[lo:hi, None], 0.0) * OMEGA
        consumed = np.sum((Pm + losses) * DT, axis=1)
        soc[lo:hi] = 100.0 * (1.0 - consumed / CAPACITY_J)
        tbl[lo:hi] = np.sum(losses * DT, axis=1)
    return soc, tbl


# --- pareto front ---------------------------------------------------------------

def pareto_front(points: list[tuple[float, float, object]]) -> list[object]:
    """Non-dominated payloads for (soc up, tbl down); ties all survive.

    A point is dominated when another has loss no greater and charge no
    smaller, with at least one strict. Sort-sweep over loss groups.
    """
    if not points:
        return []
    order = sorted(range(len(points)), key=lambda i: (points[i][1], -points[i][0]))
    survivors: list[object] = []
    best_soc = -math.inf
    i = 0
    while i < len(order):
        j = i
        group_tbl = points[order[i]][1]
        while j < len(order) and points[order[j]][1] == group_tbl:
            j += 1
        group = order[i:j]
        group_best = max(points[g][0] for g in group)
        if group_best > best_soc:
            survivors.extend(points[g][2] for g in group if points[g][0] == group_best)
            best_soc = group_best
        i = j
    return survivors


def pareto_front_naive(points: list[tuple[float, float, object]]) -> list[object]:
    """Quadratic reference used to cross-check the sweep implementation."""
    out = []
    for i, (soc_i, tbl_i, payload) in enumerate(points):
        dominated = any(
            (tbl_j <= tbl_i and soc_j >= soc_i) and (tbl_j < tbl_i or soc_j > soc_i)
            for j, (soc_j, tbl_j, _) in enumerate(points)
            if j != i
        )
        if not dominated:
            out.append(payload)
    return out


# --- languages ------------------------------------------------------------------

_CONFIG_DOMAINS = {
    "Voltage": RealDomain(unit="V", lo=50.0, hi=2000.0),
    "MaxTorque": RealDomain(unit="Nm", lo=50.0, hi=5000.0),
    "InternalRes": RealDomain(unit="ohm", lo=0.0, hi=5.0),
}
_SOC_DOMAIN = RealDomain(unit="%", lo=-1e9, hi=100.0)
_TBL_DOMAIN = RealDomain(unit="J", lo=0.0, hi=math.inf)


def tms_request(
    V: float,
    T: float,
    R: float,
    stim: str = STANDARD_CYCLE,
    poi: Iterable[str] = ("SoC", "TBL"),
) -> Request:
    return Request(
        language_id=RL_TMS,
        binding=bind(
            {
                "Voltage": Quantity(V, "V"),
                "MaxTorque": Quantity(T, "Nm"),
                "InternalRes": Quantity(R, "ohm"),
                "stim": ProfileRef(stim),
            }
        ),
        poi=frozenset(poi),
    )


def _config_of(request: Request) -> tuple[float, float, float]:
    return (
        real(request.binding, "Voltage"),
        real(request.binding, "MaxTorque"),
        real(request.binding, "InternalRes"),
    )


def _stim_of(item) -> str:
    v = binding_get(item.binding if not isinstance(item, ExperimentSpec) else item.params, "stim")
    if not isinstance(v, ProfileRef):
        raise DomainViolation("stim must reference a drive cycle")
    return v.profile_id


def _tms_complete(request: Request) -> list[ExperimentSpec]:
    origin = request_key(request)
    stim = binding_get(request.binding, "stim")
    return [
        ExperimentSpec(
            language_id=SL_TMS,
            kind="Load",
            params=bind({"stim": stim}),
            origin_request=origin,
        ),
        ExperimentSpec(
            language_id=SL_TMS,
            kind="Execute",
            params=request.binding,
            origin_request=origin,
        ),
    ]


def _tms_execute(spec: ExperimentSpec) -> ExperimentResult:
    V = real(spec.params, "Voltage")
    T = real(spec.params, "MaxTorque")
    R = real(spec.params, "InternalRes")
    return simulate_thermal(V, T, R, _stim_of(spec))


def _poi_response(poi: frozenset[str], soc: float, tbl: float) -> Response:
    available = {"SoC": Quantity(soc, "%"), "TBL": Quantity(tbl, "J")}
    return Response(values=bind({k: available[k] for k in poi}))


def _tms_compute(request: Request, results: list[ExperimentResult]) -> Response:
    result = results[0]
    soc_trace = result.traces.get("SoC")
    if soc_trace is None or len(soc_trace.values) == 0:
        raise EmptyResults("run produced an empty state-of-charge trace")
    soc, tbl = final_metrics(result)
    low = float(np.min(result.traces["SoC"].values))
    if low < soc - 1e-9:
        raise ExecutionFailure("state of charge dipped below its final value")
    return _poi_response(request.poi, soc, tbl)


def _response_metrics(rsp: Response) -> tuple[float, float]:
    return real(rsp.values, "SoC"), real(rsp.values, "TBL")


# Advisory stand-ins for a skipped configuration: no charge left, every
# joule lost. Deterministic constants keep serialized answers stable.
_SKIP_ADVISORY = {"SoC": Quantity(0.0, "%"), "TBL": Quantity(CAPACITY_J, "J")}


def _skip_response(poi: frozenset[str], stored_rsp: Response) -> Response:
    carried = dict(stored_rsp.values)
    values = {var: carried.get(var, _SKIP_ADVISORY[var]) for var in poi}
    return Response(values=bind(values), skipped=True)


def _sweep_grid(q: Query) -> list[tuple[float, float, float]]:
    """Grid of (V, T, R) configurations the query spans."""
    bound = dict(q.binding)
    fixed = {var: real(q.binding, var) for var in AXIS_VARS if var in bound}
    box = bound.get("Constr")
    axis_values: dict[str, np.ndarray] = {}
    if box is not None:
        if not isinstance(box, BoxConstraint):
            raise DomainViolation("Constr must be a box constraint")
        for axis in box.axes:
            if axis.var not in AXIS_VARS or axis.var in fixed:
                raise EmptyDecomposition(
                    f"box axis {axis.var} does not match an open configuration variable"
                )
            axis_values[axis.var] = axis.values()
    missing = [v for v in AXIS_VARS if v not in fixed and v not in axis_values]
    if missing:
        raise EmptyDecomposition(f"configuration variables {missing} are unconstrained")
    grids = []
    for var in AXIS_VARS:  # sorted; the last axis varies fastest
        grids.append(np.array([fixed[var]]) if var in fixed else axis_values[var])
    if any(len(g) == 0 for g in grids):
        raise EmptyDecomposition("a box axis contains no grid points")
    return [(v, t, r) for r, t, v in itertools.product(*grids)]


def _sweep_decompose(q: Query) -> list[Request]:
    stim = _stim_of(q)
    return [tms_request(V=v, T=t, R=r, stim=stim) for v, t, r in _sweep_grid(q)]


def _front_point(request: Request, soc: float, tbl: float):
    V, T, R = _config_of(request)
    return bind(
        {
            "Voltage": Quantity(V, "V"),
            "MaxTorque": Quantity(T, "Nm"),
            "InternalRes": Quantity(R, "ohm"),
            "SoC": Quantity(soc, "%"),
            "TBL": Quantity(tbl, "J"),
        }
    )


def _sweep_aggregate(q: Query, fulfilments) -> BindingSet:
    live = []
    any_live = False
    for request, rsp in fulfilments:
        if rsp.skipped:
            continue
        any_live = True
        soc, tbl = _response_metrics(rsp)
        if soc < UNSTABLE_SOC:
            continue  # ran, but not viable
        live.append((soc, tbl, _front_point(request, soc, tbl)))
    front = pareto_front(live)
    return BindingSet(points=tuple(front), all_skipped=not any_live)


def _sweep_answered_by(q: Query, answer) -> bool:
    """Ground truth: direct metrics for the whole grid, naive front on top."""
    if not isinstance(answer, BindingSet):
        return False
    grid = _sweep_grid(q)
    stim = _stim_of(q)
    soc, tbl = batch_metrics(
        np.array([g[0] for g in grid]),
        np.array([g[1] for g in grid]),
        np.array([g[2] for g in grid]),
        stim,
    )
    viable = [
        (soc[i], tbl[i], (grid[i][0], grid[i][1], grid[i][2], soc[i], tbl[i]))
        for i in range(len(grid))
        if soc[i] >= UNSTABLE_SOC
    ]
    expected = pareto_front_naive(viable)
    got = []
    for p in answer.points:
        d = dict(p)
        got.append(
            (
                d["Voltage"].value,
                d["MaxTorque"].value,
                d["InternalRes"].value,
                d["SoC"].value,
                d["TBL"].value,
            )
        )

    def close(a, b):
        return all(math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-9) for x, y in zip(a, b))

    if len(got) != len(expected):
        return False
    unmatched = list(expected)
    for g in got:
        for i, e in enumerate(unmatched):
            if close(g, e):
                del unmatched[i]
                break
        else:
            return False
    return True


def register_battery_languages(registry: LanguageRegistry) -> None:
    registry.register_request_language(
        RequestLanguage(
            id=RL_TMS,
            variables=frozenset(AXIS_VARS) | {"stim"},
            poi_vars=frozenset({"SoC", "TBL"}),
            domains={**_CONFIG_DOMAINS, "stim": ProfileDomain()},
            poi_domains={"SoC": _SOC_DOMAIN, "TBL": _TBL_DOMAIN},
        )
    )
    registry.register_spec_language(
        SpecLanguage(
            id=SL_TMS,
            kind_rank={"Load": 0, "Execute": 1},
            result_kinds=frozenset({"Execute"}),
            result_schema=(("P", "W"), ("SoC", "%"), ("TBL", "J")),
            domains={**_CONFIG_DOMAINS, "stim": ProfileDomain()},
        )
    )
    # one scheme per way of fixing some axes directly and boxing the rest
    schemes = set()
    for k in range(len(AXIS_VARS) + 1):
        for fixed in itertools.combinations(AXIS_VARS, k):
            base = frozenset(fixed) | {"stim"}
            if k == len(AXIS_VARS):
                schemes.add(base)
            else:
                schemes.add(base | {"Constr"})
    registry.register_query_language(
        QueryLanguage(
            id=QL_SWEEP,
            variables=frozenset(AXIS_VARS) | {"stim", "Constr"},
            schemes=frozenset(schemes),
            domains={
                **_CONFIG_DOMAINS,
                "stim": ProfileDomain(),
                "Constr": BoxDomain(axis_vars=frozenset(AXIS_VARS)),
            },
            answers=BindingSetAnswerDomain(
                point_vars=frozenset(AXIS_VARS) | {"SoC", "TBL"}
            ),
        )
    )
    registry.register_structure(
        LanguageStructure(
            query_language_id=QL_SWEEP,
            request_language_id=RL_TMS,
            spec_language_id=SL_TMS,
            decompose=_sweep_decompose,
            aggregate=_sweep_aggregate,
            complete=_tms_complete,
            compute=_tms_compute,
            execute=_tms_execute,
            answered_by=_sweep_answered_by,
        )
    )


# --- reuse knowledge ------------------------------------------------------------

def _stim_feature(profile_id: str) -> float:
    # numeric stand-in for profile identity; exact-match axis (scale 0).
    # justification and recomputation reconfirm identity on the subjects
    # themselves, so a hash collision can only widen the candidate list.
    return float(zlib.crc32(profile_id.encode()))


def _request_features(r: Request) -> tuple[float, ...]:
    V, T, R = _config_of(r)
    return (V, T, R, _stim_feature(_stim_of(r)))


def _skip_prefilter(matrix: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (
        (matrix[:, 0] >= x[0])
        & (matrix[:, 1] >= x[1])
        & (matrix[:, 2] <= x[2])
        & (matrix[:, 3] == x[3])
    )


def battery_justify(stored_r: Request, stored_rsp: Response, new_r: Request, evidence) -> Response | None:
    """Exclude a configuration dominated by a known-unstable one.

    Less voltage means more current, less torque headroom means more
    overload, more resistance means more ohmic loss, all under the same
    demand: the new configuration ends with no more charge than the stored
    one. A stored exclusion chains the same argument.
    """
    if _stim_of(stored_r) != _stim_of(new_r):
        return None
    sV, sT, sR = _config_of(stored_r)
    nV, nT, nR = _config_of(new_r)
    if not (sV >= nV and sT >= nT and sR <= nR):
        return None
    if not stored_rsp.skipped:
        stored_vars = binding_vars(stored_rsp.values)
        if "SoC" not in stored_vars:
            return None  # stored run never reported charge; no exclusion argument
        if real(stored_rsp.values, "SoC") >= UNSTABLE_SOC:
            return None
    return _skip_response(new_r.poi, stored_rsp)


def battery_recompute(stored_r: Request, stored_rsp: Response, new_r: Request, evidence) -> Response | None:
    """Rebuild the metrics for a nearby configuration from the stored run.

    The stored trace supplies the demand series; the configuration only
    enters through closed-form loss arithmetic, so the rebuilt metrics
    match a fresh run to rounding error.
    """
    if not evidence:
        return None
    if _stim_of(stored_r) != _stim_of(new_r):
        return None
    result = evidence[0]
    trace = result.traces.get("P")
    if trace is None or len(trace.values) == 0:
        return None
    V, T, R = _config_of(new_r)
    soc, tbl = derive_series(trace.values, V, T, R)
    return _poi_response(new_r.poi, float(soc[-1]), float(tbl[-1]))


def _inflate(scales):
    return tuple(s if s == 0.0 or math.isinf(s) else s * (1.0 + 1e-9) for s in scales)


def tms_request_scheme(
    *,
    t_V: float = 1.0,
    t_T: float = 1.0,
    t_R: float = 0.02,
    comp_t_V: float = 0.0,
    comp_t_T: float = 0.0,
    comp_t_R: float = 0.0,
    justify_enabled: bool = True,
    retrieval_enabled: bool = True,
    recompute_enabled: bool = True,
) -> ReasoningScheme:
    return ReasoningScheme(
        layer=LAYER_DECOMPOSITION,
        language_id=RL_TMS,
        feature_names=("Voltage", "MaxTorque", "InternalRes", "stim"),
        features=_request_features,
        get_scales=_inflate((t_V, t_T, t_R, 0.0)) if retrieval_enabled else None,
        comp_scales=_inflate((comp_t_V, comp_t_T, comp_t_R, 0.0)) if recompute_enabled else None,
        justify=battery_justify if justify_enabled else None,
        justify_prefilter=_skip_prefilter if justify_enabled else None,
        recompute=battery_recompute if recompute_enabled else None,
        recompute_evidence=EVIDENCE_RESULTS,
    )


def sweep_query(
    axes: dict[str, tuple[float, float, float]],
    *,
    stim: str = STANDARD_CYCLE,
    **fixed: float,
) -> Query:
    """Sweep over ``axes`` (var -> (lo, hi, step)) with other vars fixed."""
    from .values import BoxAxis

    values: dict[str, object] = {"stim": ProfileRef(stim)}
    for var, value in fixed.items():
        values[var] = Quantity(float(value), _UNITS[var])
    if axes:
        values["Constr"] = BoxConstraint(
            axes=tuple(
                BoxAxis(var=var, lo=float(lo), hi=float(hi), step=float(step))
                for var, (lo, hi, step) in sorted(axes.items())
            )
        )
    return Query(language_id=QL_SWEEP, binding=bind(values))
