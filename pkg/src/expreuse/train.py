"""Train braking domain: stopping-distance studies over a toy brake model.

Model: a train at speed v (km/h) brakes with constant deceleration

    a = F_B + m * g * (sin(theta) + mu * cos(theta))

(F_B is a dimensionless braking index, theta the grade in degrees, mu the
rail friction coefficient; the m * g term folds grade and friction into the
deceleration). The stopping distance from initial speed u = v / 3.6 is
u^2 / (2 a) when a > 0 and unbounded otherwise.

The reference experiment integrates the same model with explicit Euler at
a fixed step and reports the travelled distance at the first step where
the speed reaches zero. That distance is a one-sided overestimate of the
closed form by at most u * dt. Runs are capped; a run that has not
stopped by the cap reports an unbounded stopping distance.

Two query languages sit on one request language:

* ``train-eng``  binds the five physical parameters plus a distance and
  asks whether the train stops within it.
* ``train-sale`` binds a train from the catalog and optionally one
  situation; it asks whether the train stops within the situation's
  distance (all catalog situations when none is bound).
"""

from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import InvalidLayout
from .languages import (
    BoolAnswerDomain,
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
    EVIDENCE_FULFILMENTS,
    LAYER_USER,
    ReasoningScheme,
)
from .values import Quantity, RealDomain, Symbol, SymbolDomain, bind, real

G = 9.81
DT = 0.01  # Euler step, seconds
T_MAX = 600.0  # hard cap on simulated time, seconds
TAIL = 1.0  # recorded tail after the stop, seconds

QL_ENG = "train-eng"
QL_SALE = "train-sale"
RL_STOP = "train-stop"
SL_SIM = "train-sim"

PARAM_VARS = ("m", "F_B", "v", "mu", "theta")


# --- physics -------------------------------------------------------------------

def brake_decel(m: float, F_B: float, v: float, mu: float, theta: float) -> float:
    th = math.radians(theta)
    return F_B + m * G * (math.sin(th) + mu * math.cos(th))


def closed_form_stop(m: float, F_B: float, v: float, mu: float, theta: float) -> tuple[float, float]:
    """(stopping distance, stopping time); both unbounded when a <= 0."""
    a = brake_decel(m, F_B, v, mu, theta)
    u = v / 3.6
    if a <= 0.0:
        return math.inf, math.inf
    if u == 0.0:
        return 0.0, 0.0
    return u * u / (2.0 * a), u / a


def simulate_stop(
    m: float, F_B: float, v: float, mu: float, theta: float, *, dt: float = DT, t_max: float = T_MAX
) -> ExperimentResult:
    """Explicit Euler run of the braking model.

    The deceleration is constant, so the grid is evaluated in closed form;
    positions are exact Euler prefix sums, not an approximation of them.
    """
    a = brake_decel(m, F_B, v, mu, theta)
    u = v / 3.6
    cap_steps = int(round(t_max / dt))
    if a > 0.0 and u / a <= t_max:
        k_stop = math.ceil(u / (a * dt)) if u > 0.0 else 0
        n = min(k_stop, cap_steps)
    else:
        n = cap_steps  # never reaches zero inside the cap
    tail = int(round(TAIL / dt)) if n < cap_steps else 0
    steps = np.arange(n + tail + 1, dtype=float)
    velocity = np.maximum(u - a * steps * dt, 0.0)
    if n < cap_steps:
        velocity[n:] = 0.0  # stopped; hold for the recorded tail
    position = np.empty_like(velocity)
    position[0] = 0.0
    np.cumsum(velocity[:-1] * dt, out=position[1:])
    times = steps * dt
    return ExperimentResult(
        traces={
            "velocity": TraceSeries(times=times, values=velocity),
            "position": TraceSeries(times=times, values=position),
        },
        dt=dt,
    )


def stop_distance_from_result(result: ExperimentResult) -> float:
    """Travelled distance at the first zero-speed sample; unbounded if none."""
    velocity = result.traces["velocity"].values
    position = result.traces["position"].values
    idx = np.nonzero(velocity == 0.0)[0]
    if len(idx) == 0:
        return math.inf
    return float(position[idx[0]])


# --- catalog -------------------------------------------------------------------

@dataclass(frozen=True)
class Catalog:
    trains: dict[str, dict[str, float]]
    situations: dict[str, dict[str, float]]


_TRAIN_KEYS = {"m", "F_B"}
_SITUATION_KEYS = {"v", "mu", "theta", "dist"}


def load_catalog(path: str | None = None) -> Catalog:
    if path is None:
        source = importlib.resources.files("expreuse").joinpath("data/train_catalog.yaml")
        raw = yaml.safe_load(source.read_text())
    else:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or raw.get("schema_version") != 1:
        raise InvalidLayout("catalog: expected mapping with schema_version 1")
    trains = raw.get("trains") or {}
    situations = raw.get("situations") or {}
    for name, entry in trains.items():
        if set(entry) != _TRAIN_KEYS:
            raise InvalidLayout(f"catalog train {name}: needs exactly {sorted(_TRAIN_KEYS)}")
    for name, entry in situations.items():
        if set(entry) != _SITUATION_KEYS:
            raise InvalidLayout(f"catalog situation {name}: needs exactly {sorted(_SITUATION_KEYS)}")
    if not trains or not situations:
        raise InvalidLayout("catalog: must list at least one train and one situation")
    return Catalog(
        trains={k: {kk: float(vv) for kk, vv in v.items()} for k, v in trains.items()},
        situations={k: {kk: float(vv) for kk, vv in v.items()} for k, v in situations.items()},
    )


# --- languages -----------------------------------------------------------------

_PARAM_DOMAINS = {
    "m": RealDomain(unit="kg", lo=1.0, hi=1e6),
    "F_B": RealDomain(unit="1", lo=0.0, hi=1e3),
    "v": RealDomain(unit="km/h", lo=0.0, hi=500.0),
    "mu": RealDomain(unit="1", lo=0.0, hi=1.5),
    "theta": RealDomain(unit="deg", lo=-30.0, hi=30.0),
}
_DIST_DOMAIN = RealDomain(unit="m", lo=0.0, hi=1e6)
_STOPDIST_DOMAIN = RealDomain(unit="m", lo=0.0, hi=math.inf)

_UNITS = {"m": "kg", "F_B": "1", "v": "km/h", "mu": "1", "theta": "deg"}


def _param_binding(values: dict[str, float]):
    return bind({k: Quantity(values[k], _UNITS[k]) for k in PARAM_VARS})


def _params_of(item) -> tuple[float, float, float, float, float]:
    return tuple(real(item.binding, k) for k in PARAM_VARS)


def _stop_request(values: dict[str, float]) -> Request:
    return Request(language_id=RL_STOP, binding=_param_binding(values), poi=frozenset({"stopDist"}))


def _execute(spec: ExperimentSpec) -> ExperimentResult:
    params = {k: real(spec.params, k) for k in PARAM_VARS}
    return simulate_stop(**params)


def _complete(request: Request) -> list[ExperimentSpec]:
    return [
        ExperimentSpec(
            language_id=SL_SIM,
            kind="Simulate",
            params=request.binding,
            origin_request=request_key(request),
        )
    ]


def _compute(request: Request, results: list[ExperimentResult]) -> Response:
    dist = stop_distance_from_result(results[0])
    return Response(values=bind({"stopDist": Quantity(dist, "m")}))


def _response_stop_distance(rsp: Response) -> float:
    return real(rsp.values, "stopDist")


def _eng_decompose(q: Query) -> list[Request]:
    return [_stop_request({k: real(q.binding, k) for k in PARAM_VARS})]


def _eng_aggregate(q: Query, fulfilments) -> bool:
    rsp = fulfilments[0][1]
    return bool(_response_stop_distance(rsp) < real(q.binding, "dist"))


def _eng_answered_by(q: Query, answer) -> bool:
    """Ground truth with a tolerance band around the model's grid error.

    Near the decision boundary (and near the time cap) the Euler grid
    legitimately lands on either side; those queries accept any verdict.
    """
    params = {k: real(q.binding, k) for k in PARAM_VARS}
    dist = real(q.binding, "dist")
    s, t_stop = closed_form_stop(**params)
    u = params["v"] / 3.6
    if math.isfinite(t_stop) and abs(t_stop - T_MAX) <= 5.0:
        return True
    if math.isfinite(s) and abs(s - dist) <= u * DT + 1e-6:
        return True
    expected = t_stop <= T_MAX and s < dist
    return answer == expected


def _sale_situations(catalog: Catalog, q: Query) -> list[tuple[str, dict[str, float]]]:
    bound = dict(q.binding)
    if "situation" in bound:
        name = bound["situation"].name
        return [(name, catalog.situations[name])]
    return sorted(catalog.situations.items())


def make_sale_structure(catalog: Catalog) -> LanguageStructure:
    def decompose(q: Query) -> list[Request]:
        train = catalog.trains[q["train"].name]
        return [
            _stop_request({**train, "v": sit["v"], "mu": sit["mu"], "theta": sit["theta"]})
            for _, sit in _sale_situations(catalog, q)
        ]

    def aggregate(q: Query, fulfilments) -> bool:
        sits = _sale_situations(catalog, q)
        return all(
            _response_stop_distance(rsp) < sit["dist"]
            for (_, sit), (_req, rsp) in zip(sits, fulfilments)
        )

    def answered_by(q: Query, answer) -> bool:
        train = catalog.trains[q["train"].name]
        expected = True
        for _, sit in _sale_situations(catalog, q):
            s, t_stop = closed_form_stop(
                m=train["m"], F_B=train["F_B"], v=sit["v"], mu=sit["mu"], theta=sit["theta"]
            )
            u = sit["v"] / 3.6
            if math.isfinite(s) and abs(s - sit["dist"]) <= u * DT + 1e-6:
                return True  # boundary situation, both verdicts defensible
            if math.isfinite(t_stop) and abs(t_stop - T_MAX) <= 5.0:
                return True
            expected = expected and t_stop <= T_MAX and s < sit["dist"]
        return answer == expected

    return LanguageStructure(
        query_language_id=QL_SALE,
        request_language_id=RL_STOP,
        spec_language_id=SL_SIM,
        decompose=decompose,
        aggregate=aggregate,
        complete=_complete,
        compute=_compute,
        execute=_execute,
        answered_by=answered_by,
    )


def register_train_languages(registry: LanguageRegistry, catalog: Catalog | None = None) -> Catalog:
    """Register both train query languages plus their shared lower layers."""
    catalog = catalog or load_catalog()
    registry.register_request_language(
        RequestLanguage(
            id=RL_STOP,
            variables=frozenset(PARAM_VARS),
            poi_vars=frozenset({"stopDist"}),
            domains=dict(_PARAM_DOMAINS),
            poi_domains={"stopDist": _STOPDIST_DOMAIN},
        )
    )
    registry.register_spec_language(
        SpecLanguage(
            id=SL_SIM,
            kind_rank={"Simulate": 0},
            result_kinds=frozenset({"Simulate"}),
            result_schema=(("velocity", "m/s"), ("position", "m")),
            domains=dict(_PARAM_DOMAINS),
        )
    )
    registry.register_query_language(
        QueryLanguage(
            id=QL_ENG,
            variables=frozenset(PARAM_VARS) | {"dist"},
            schemes=frozenset({frozenset(PARAM_VARS) | {"dist"}}),
            domains={**_PARAM_DOMAINS, "dist": _DIST_DOMAIN},
            answers=BoolAnswerDomain(),
        )
    )
    registry.register_structure(
        LanguageStructure(
            query_language_id=QL_ENG,
            request_language_id=RL_STOP,
            spec_language_id=SL_SIM,
            decompose=_eng_decompose,
            aggregate=_eng_aggregate,
            complete=_complete,
            compute=_compute,
            execute=_execute,
            answered_by=_eng_answered_by,
        )
    )
    registry.register_query_language(
        QueryLanguage(
            id=QL_SALE,
            variables=frozenset({"train", "situation"}),
            schemes=frozenset({frozenset({"train"}), frozenset({"train", "situation"})}),
            domains={
                "train": SymbolDomain(members=frozenset(catalog.trains)),
                "situation": SymbolDomain(members=frozenset(catalog.situations)),
            },
            answers=BoolAnswerDomain(),
        )
    )
    registry.register_structure(make_sale_structure(catalog))
    return catalog


def eng_query(m: float, F_B: float, v: float, mu: float, theta: float, dist: float) -> Query:
    return Query(
        language_id=QL_ENG,
        binding=bind(
            {
                "m": Quantity(m, "kg"),
                "F_B": Quantity(F_B, "1"),
                "v": Quantity(v, "km/h"),
                "mu": Quantity(mu, "1"),
                "theta": Quantity(theta, "deg"),
                "dist": Quantity(dist, "m"),
            }
        ),
    )


def sale_query(train: str, situation: str | None = None) -> Query:
    values = {"train": Symbol(train)}
    if situation is not None:
        values["situation"] = Symbol(situation)
    return Query(language_id=QL_SALE, binding=bind(values))


# --- reuse knowledge -----------------------------------------------------------

def _grade_term(mu: float, theta: float) -> float:
    th = math.radians(theta)
    return math.sin(th) + mu * math.cos(th)


def _query_features(q: Query) -> tuple[float, ...]:
    return tuple(real(q.binding, k) for k in (*PARAM_VARS, "dist"))


def _justify_prefilter(matrix: np.ndarray, x: np.ndarray) -> np.ndarray:
    m, fb, v, mu, th = (matrix[:, i] for i in range(5))
    safe = (m <= x[0]) & (fb <= x[1]) & (v >= x[2]) & (mu <= x[3]) & (th <= x[4])
    unsafe = (m >= x[0]) & (fb >= x[1]) & (v <= x[2]) & (mu >= x[3]) & (th >= x[4])
    return safe | unsafe


def train_justify(stored_q: Query, stored_answer, new_q: Query, evidence) -> bool | None:
    """Transfer a verdict between parameterizations by monotonicity.

    The stored query's recorded stopping distance (its fulfilment) anchors
    the argument; without that evidence nothing can be derived. Both
    configurations must brake at least as hard as gravity pushes
    (grade-plus-friction term nonnegative), otherwise the mass direction
    of the monotonicity argument flips.

    The unsafe direction must additionally clear the stored run's grid
    overshoot: the recorded distance may exceed the true one by up to
    u * dt, so only a margin beyond that transfers a negative verdict.
    """
    if not evidence:
        return None
    sm, sf, sv, smu, sth = (real(stored_q.binding, k) for k in PARAM_VARS)
    nm, nf, nv, nmu, nth = (real(new_q.binding, k) for k in PARAM_VARS)
    if _grade_term(smu, sth) < 0.0 or _grade_term(nmu, nth) < 0.0:
        return None
    stored_stop = _response_stop_distance(evidence[0][1])
    new_dist = real(new_q.binding, "dist")
    if sm <= nm and sf <= nf and sv >= nv and smu <= nmu and sth <= nth:
        if stored_stop < new_dist:
            return True
    if sm >= nm and sf >= nf and sv <= nv and smu >= nmu and sth >= nth:
        guard = (sv / 3.6) * DT + 1e-9
        if stored_stop > new_dist + guard:
            return False
    return None


def train_recompute(stored_q: Query, stored_answer, new_q: Query, evidence) -> bool | None:
    """Re-evaluate the distance comparison with the stored stopping distance.

    Approximate on purpose: nearby parameters are assumed to stop about
    where the stored ones did, only the questioned distance is replaced.
    """
    if not evidence:
        return None
    return bool(_response_stop_distance(evidence[0][1]) < real(new_q.binding, "dist"))


def _inflate(scales):
    # a hair of slack so lattice-aligned differences sit inside, not on,
    # the acceptance boundary despite float noise
    return tuple(s if s == 0.0 or math.isinf(s) else s * (1.0 + 1e-9) for s in scales)


def train_user_scheme(
    *,
    t_m: float = 100.0,
    t_FB: float = 0.05,
    t_v: float = 0.5,
    t_mu: float = 0.05,
    t_theta: float = 0.1,
    t_dist: float = 1.0,
    justify_enabled: bool = True,
    retrieval_enabled: bool = True,
    recompute_enabled: bool = True,
) -> ReasoningScheme:
    return ReasoningScheme(
        layer=LAYER_USER,
        language_id=QL_ENG,
        feature_names=(*PARAM_VARS, "dist"),
        features=_query_features,
        get_scales=_inflate((t_m, t_FB, t_v, t_mu, t_theta, t_dist)) if retrieval_enabled else None,
        comp_scales=_inflate((t_m, t_FB, t_v, t_mu, t_theta, math.inf)) if recompute_enabled else None,
        justify=train_justify if justify_enabled else None,
        justify_prefilter=_justify_prefilter if justify_enabled else None,
        recompute=train_recompute if recompute_enabled else None,
        justify_evidence=EVIDENCE_FULFILMENTS,
        recompute_evidence=EVIDENCE_FULFILMENTS,
    )


def random_eng_queries(rng: np.random.Generator, n: int) -> list[Query]:
    """Engineering queries over the sampling box the studies use."""
    out = []
    for _ in range(n):
        out.append(
            eng_query(
                m=float(rng.uniform(500.0, 50000.0)),
                F_B=float(rng.uniform(0.05, 0.5)),
                v=float(rng.uniform(10.0, 300.0)),
                mu=float(rng.uniform(0.001, 1.0)),
                theta=float(rng.uniform(-1.0, 10.0)),
                dist=float(rng.uniform(1.0, 2000.0)),
            )
        )
    return out
