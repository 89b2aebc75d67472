"""Reasoning schemes: how stored work is matched against new work.

A scheme equips one (layer, language) pair with

* a feature map projecting subjects onto a numeric vector,
* per-axis scales turning feature differences into a scaled Chebyshev
  distance (the retrieval and recomputation metrics),
* an optional justification rule deriving an outcome for a new subject
  from a stored one by a monotonicity argument, and
* an optional recomputation rule rebuilding the outcome for a new subject
  from a stored subject's outcome plus supporting evidence.

Distance convention: d = max_i |a_i - b_i| / s_i with two edge cases per
axis, s_i = 0 demands exact equality (else infinite) and s_i = inf ignores
the axis. A candidate is accepted when d < threshold, so the default
threshold 1.0 makes the scales per-axis tolerance boxes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

LAYER_USER = "user"
LAYER_DECOMPOSITION = "decomposition"
LAYER_EXECUTION = "execution"

EVIDENCE_FULFILMENTS = "fulfilments"
EVIDENCE_RESULTS = "results"


@dataclass(frozen=True)
class ReasoningScheme:
    """Reuse knowledge for one language at one layer.

    ``justify(stored_subject, stored_outcome, new_subject, evidence)``
    returns the derived outcome or None when the rule does not fire.
    ``recompute(stored_subject, stored_outcome, new_subject, evidence)``
    returns the rebuilt outcome or None when the evidence is insufficient.
    ``justify_evidence`` / ``recompute_evidence`` name what the engine
    fetches for those calls: the stored fulfilments behind a source query,
    or the stored results behind a source request. Execution-layer schemes
    have no recomputation rule.
    """

    layer: str
    language_id: str
    feature_names: tuple[str, ...]
    features: Callable[[Any], tuple[float, ...]]
    get_scales: tuple[float, ...] | None = None
    comp_scales: tuple[float, ...] | None = None
    t_retrieve: float = 1.0
    t_recompute: float = 1.0
    justify: Optional[Callable] = None
    justify_prefilter: Optional[Callable] = None  # (matrix, x) -> candidate row mask
    recompute: Optional[Callable] = None
    justify_evidence: str | None = None
    recompute_evidence: str | None = None

    def __post_init__(self) -> None:
        if self.layer == LAYER_EXECUTION and self.recompute is not None:
            raise ValueError("execution-layer schemes cannot recompute")
        for scales in (self.get_scales, self.comp_scales):
            if scales is not None and len(scales) != len(self.feature_names):
                raise ValueError("scale vector length must match feature count")

    def vector(self, subject) -> np.ndarray:
        return np.asarray(self.features(subject), dtype=float)

    def get_distance(self, stored, new) -> float:
        if self.get_scales is None:
            return math.inf
        return float(
            scaled_chebyshev_rows(
                self.vector(stored)[None, :], self.vector(new), self.get_scales
            )[0]
        )

    def comp_distance(self, stored, new) -> float:
        if self.comp_scales is None:
            return math.inf
        return float(
            scaled_chebyshev_rows(
                self.vector(stored)[None, :], self.vector(new), self.comp_scales
            )[0]
        )


def scaled_chebyshev_rows(matrix: np.ndarray, x: np.ndarray, scales: Sequence[float]) -> np.ndarray:
    """Scaled Chebyshev distance from each matrix row to ``x``.

    Zero scale on an axis demands exact equality, infinite scale ignores it.
    """
    if matrix.ndim != 2 or matrix.shape[1] != len(x) or len(scales) != len(x):
        raise ValueError("matrix, point, and scales must agree on axis count")
    if matrix.shape[0] == 0:
        return np.empty(0)
    diff = np.abs(matrix - x)
    out = np.zeros(matrix.shape[0])
    for j, s in enumerate(scales):
        col = diff[:, j]
        if s == 0.0:
            contrib = np.where(col == 0.0, 0.0, math.inf)
        elif math.isinf(s):
            continue
        else:
            contrib = col / s
        out = np.maximum(out, contrib)
    return out


# --- property-check helpers (used by tests and the shadow checks) -------------

def check_metric_axioms(
    dist: Callable[[Any, Any], float], subjects: Sequence, *, tol: float = 1e-9
) -> list[str]:
    """Identity, symmetry, and triangle inequality on a sample.

    The triangle check is restricted to all-finite triples; infinities
    encode 'out of range' rather than a measured separation.
    """
    issues: list[str] = []
    for i, a in enumerate(subjects):
        if abs(dist(a, a)) > tol:
            issues.append(f"d(s{i}, s{i}) != 0")
    for (i, a), (j, b) in itertools.combinations(enumerate(subjects), 2):
        dab, dba = dist(a, b), dist(b, a)
        if math.isinf(dab) != math.isinf(dba) or (
            math.isfinite(dab) and abs(dab - dba) > tol
        ):
            issues.append(f"d(s{i}, s{j}) != d(s{j}, s{i})")
    for (i, a), (j, b), (k, c) in itertools.combinations(enumerate(subjects), 3):
        dab, dbc, dac = dist(a, b), dist(b, c), dist(a, c)
        if all(map(math.isfinite, (dab, dbc, dac))) and dac > dab + dbc + tol:
            issues.append(f"triangle fails on (s{i}, s{j}, s{k})")
    return issues


@dataclass
class InsensitivityReport:
    pairs_checked: int
    pairs_close: int
    violations: int

    @property
    def violation_rate(self) -> float:
        return self.violations / self.pairs_close if self.pairs_close else 0.0


def check_insensitivity(
    scheme: ReasoningScheme,
    subjects: Sequence,
    outcome: Callable[[Any], Any],
    *,
    equal: Callable[[Any, Any], bool] | None = None,
) -> InsensitivityReport:
    """How often nearby subjects (get distance below threshold) disagree.

    Retrieval reuse approximates: it hands back a stored outcome whenever
    the distance is under threshold. This measures the empirical error
    rate of that approximation over all subject pairs in the sample.
    """
    eq = equal or (lambda a, b: a == b)
    checked = close = violations = 0
    outs = [outcome(s) for s in subjects]
    for (i, a), (j, b) in itertools.combinations(enumerate(subjects), 2):
        checked += 1
        if scheme.get_distance(a, b) < scheme.t_retrieve:
            close += 1
            if not eq(outs[i], outs[j]):
                violations += 1
    return InsensitivityReport(pairs_checked=checked, pairs_close=close, violations=violations)
