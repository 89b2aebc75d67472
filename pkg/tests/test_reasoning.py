"""Scaled Chebyshev matching and the scheme-level property checks."""

import math

import numpy as np
import pytest

from expreuse.battery import tms_request, tms_request_scheme
from expreuse.reasoning import (
    LAYER_EXECUTION,
    ReasoningScheme,
    check_insensitivity,
    check_metric_axioms,
    scaled_chebyshev_rows,
)
from expreuse.train import closed_form_stop, eng_query, train_user_scheme
from expreuse.values import real


def _verdict(q):
    s, _ = closed_form_stop(*(real(q.binding, k) for k in ("m", "F_B", "v", "mu", "theta")))
    return s <= real(q.binding, "dist")


def test_scaled_chebyshev_basic():
    matrix = np.array([[0.0, 0.0], [1.0, 3.0], [2.0, 1.0]])
    d = scaled_chebyshev_rows(matrix, np.array([0.0, 1.0]), (1.0, 2.0))
    assert d == pytest.approx([0.5, 1.0, 2.0])


def test_scaled_chebyshev_zero_scale_demands_equality():
    matrix = np.array([[5.0, 1.0], [5.0, 2.0]])
    d = scaled_chebyshev_rows(matrix, np.array([5.0, 1.0]), (0.0, 1.0))
    assert d[0] == 0.0
    assert d[1] == 1.0
    d = scaled_chebyshev_rows(matrix, np.array([4.0, 1.0]), (0.0, 1.0))
    assert math.isinf(d[0]) and math.isinf(d[1])


def test_scaled_chebyshev_inf_scale_ignores_axis():
    matrix = np.array([[0.0, 1e9]])
    d = scaled_chebyshev_rows(matrix, np.array([0.5, 0.0]), (1.0, math.inf))
    assert d[0] == 0.5


def test_scaled_chebyshev_empty_and_shape_errors():
    assert scaled_chebyshev_rows(np.empty((0, 2)), np.zeros(2), (1.0, 1.0)).size == 0
    with pytest.raises(ValueError):
        scaled_chebyshev_rows(np.zeros((1, 3)), np.zeros(2), (1.0, 1.0))
    with pytest.raises(ValueError):
        scaled_chebyshev_rows(np.zeros((1, 2)), np.zeros(2), (1.0,))


def test_execution_layer_scheme_cannot_recompute():
    with pytest.raises(ValueError):
        ReasoningScheme(
            layer=LAYER_EXECUTION,
            language_id="x",
            feature_names=("a",),
            features=lambda s: (0.0,),
            recompute=lambda *a: None,
        )


def test_scale_vector_length_must_match_features():
    with pytest.raises(ValueError):
        ReasoningScheme(
            layer="user",
            language_id="x",
            feature_names=("a", "b"),
            features=lambda s: (0.0, 0.0),
            get_scales=(1.0,),
        )


def test_distance_is_inf_without_scales():
    scheme = ReasoningScheme(
        layer="user",
        language_id="x",
        feature_names=("a",),
        features=lambda s: (float(s),),
    )
    assert math.isinf(scheme.get_distance(1, 1))
    assert math.isinf(scheme.comp_distance(1, 1))


def _train_queries(rng, n):
    out = []
    for _ in range(n):
        out.append(
            eng_query(
                m=float(rng.uniform(500, 40000)),
                F_B=float(rng.uniform(0.05, 0.5)),
                v=float(rng.uniform(20, 200)),
                mu=float(rng.uniform(0.0, 1.0)),
                theta=float(rng.uniform(0, 40)),
                dist=float(rng.uniform(100, 3000)),
            )
        )
    return out


def test_train_get_distance_satisfies_metric_axioms(rng):
    scheme = train_user_scheme()
    qs = _train_queries(rng, 12)
    assert check_metric_axioms(scheme.get_distance, qs) == []


def test_battery_distances_satisfy_metric_axioms(rng):
    scheme = tms_request_scheme()
    rs = [
        tms_request(
            V=float(rng.uniform(200, 600)),
            T=float(rng.uniform(400, 1000)),
            R=float(rng.uniform(0.02, 0.5)),
        )
        for _ in range(12)
    ]
    assert check_metric_axioms(scheme.get_distance, rs) == []
    assert check_metric_axioms(scheme.comp_distance, rs) == []


def test_insensitivity_counts_disagreeing_neighbours(rng):
    # verdict flips at stopDist == dist; near-threshold pairs may disagree
    scheme = train_user_scheme()
    qs = _train_queries(rng, 30)
    report = check_insensitivity(scheme, qs, _verdict)
    assert report.pairs_checked == 30 * 29 // 2
    assert 0 <= report.violations <= report.pairs_close
    assert 0.0 <= report.violation_rate <= 1.0


def test_insensitivity_zero_for_constant_outcome(rng):
    scheme = train_user_scheme()
    qs = _train_queries(rng, 10)
    report = check_insensitivity(scheme, qs, lambda q: True)
    assert report.violations == 0
    assert report.violation_rate == 0.0
