"""Value model shared by queries, requests and experiment specs.

A bound value is one of:

* ``Quantity``    -- a real number with a unit annotation,
* ``Symbol``      -- a member of a finite enumeration,
* ``STAR``        -- the under-specified marker,
* ``ProfileRef``  -- a named stimulation profile,
* ``BoxConstraint`` -- per-axis (min, max, step) inequality sets.

Canonical encoding renders numbers as 12-significant-digit decimal strings;
that is the identity used for store keys, so grid points reached through
different float arithmetic (sub-box origin plus offsets vs. full-lattice
steps) collapse to the same key. Distances always use the raw floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

from .errors import DomainViolation

DIMENSIONLESS = "1"


def fmt_real(x: float) -> str:
    """Canonical decimal rendering of a real value."""
    if math.isnan(x):
        raise DomainViolation("NaN is not a legal value")
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = "%.12g" % x
    # -0.0 and 0.0 must collapse to one key
    return "0" if s == "-0" else s


@dataclass(frozen=True)
class Quantity:
    value: float
    unit: str = DIMENSIONLESS


@dataclass(frozen=True)
class Symbol:
    name: str


class _Star:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "STAR"


STAR = _Star()


@dataclass(frozen=True)
class ProfileRef:
    profile_id: str


@dataclass(frozen=True)
class BoxAxis:
    """One axis of a box constraint: values min, min+step, ... up to max.

    ``closed`` selects whether the upper bound itself is admitted (<=)
    or excluded (<). Counting is done on integers with a relative guard
    so accumulated float error in min + n*step cannot drop or duplicate
    the boundary point.
    """

    var: str
    lo: float
    hi: float
    step: float
    closed: bool = True

    def __post_init__(self) -> None:
        if not (self.lo <= self.hi):
            raise DomainViolation(f"axis {self.var}: min {self.lo} > max {self.hi}")
        if not (self.step > 0):
            raise DomainViolation(f"axis {self.var}: step must be positive")

    def count(self) -> int:
        span = (self.hi - self.lo) / self.step
        if self.closed:
            return int(math.floor(span + 1e-9)) + 1
        n = int(math.ceil(span - 1e-9))
        return max(n, 0)

    def values(self) -> list[float]:
        return [self.lo + k * self.step for k in range(self.count())]


@dataclass(frozen=True)
class BoxConstraint:
    axes: tuple[BoxAxis, ...]

    def axis(self, var: str) -> BoxAxis | None:
        for a in self.axes:
            if a.var == var:
                return a
        return None

    def point_count(self) -> int:
        n = 1
        for a in self.axes:
            n *= a.count()
        return n


Value = Union[Quantity, Symbol, _Star, ProfileRef, BoxConstraint]


# --- canonical encoding ----------------------------------------------------

def canon_value(v: Value):
    if isinstance(v, Quantity):
        return {"q": [fmt_real(v.value), v.unit]}
    if isinstance(v, Symbol):
        return {"sym": v.name}
    if v is STAR or isinstance(v, _Star):
        return {"star": 1}
    if isinstance(v, ProfileRef):
        return {"prof": v.profile_id}
    if isinstance(v, BoxConstraint):
        return {
            "box": sorted(
                [a.var, fmt_real(a.lo), fmt_real(a.hi), fmt_real(a.step), int(a.closed)]
                for a in v.axes
            )
        }
    raise DomainViolation(f"unsupported value {v!r}")


def decode_value(obj) -> Value:
    if "q" in obj:
        num, unit = obj["q"]
        return Quantity(float(num), unit)
    if "sym" in obj:
        return Symbol(obj["sym"])
    if "star" in obj:
        return STAR
    if "prof" in obj:
        return ProfileRef(obj["prof"])
    if "box" in obj:
        return BoxConstraint(
            tuple(
                BoxAxis(var, float(lo), float(hi), float(step), bool(closed))
                for var, lo, hi, step, closed in obj["box"]
            )
        )
    raise DomainViolation(f"cannot decode value {obj!r}")


def canon_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# --- value domains ---------------------------------------------------------

@dataclass(frozen=True)
class RealDomain:
    unit: str = DIMENSIONLESS
    lo: float = -math.inf
    hi: float = math.inf
    allow_star: bool = False

    def contains(self, v: Value) -> bool:
        if v is STAR:
            return self.allow_star
        if not isinstance(v, Quantity):
            return False
        if v.unit != self.unit:
            return False
        if math.isnan(v.value):
            return False
        return self.lo <= v.value <= self.hi


@dataclass(frozen=True)
class SymbolDomain:
    members: frozenset[str]
    allow_star: bool = False

    def contains(self, v: Value) -> bool:
        if v is STAR:
            return self.allow_star
        return isinstance(v, Symbol) and v.name in self.members


@dataclass(frozen=True)
class ProfileDomain:
    allow_star: bool = False

    def contains(self, v: Value) -> bool:
        if v is STAR:
            return self.allow_star
        return isinstance(v, ProfileRef)


@dataclass(frozen=True)
class BoxDomain:
    # axis variables must come from this set when non-empty
    axis_vars: frozenset[str] = field(default_factory=frozenset)

    def contains(self, v: Value) -> bool:
        if not isinstance(v, BoxConstraint):
            return False
        if self.axis_vars:
            return all(a.var in self.axis_vars for a in v.axes)
        return True


ValueDomain = Union[RealDomain, SymbolDomain, ProfileDomain, BoxDomain]


# --- bindings ---------------------------------------------------------------

Binding = tuple[tuple[str, Value], ...]


def bind(mapping: dict[str, Value]) -> Binding:
    """Normalize a variable->value mapping into a sorted hashable binding."""
    return tuple(sorted(mapping.items(), key=lambda kv: kv[0]))


def binding_get(b: Binding, var: str, default=None):
    for k, v in b:
        if k == var:
            return v
    return default


def binding_vars(b: Binding) -> frozenset[str]:
    return frozenset(k for k, _ in b)


def as_dict(b: Binding) -> dict[str, Value]:
    return dict(b)


def canon_binding(b: Binding):
    return {k: canon_value(v) for k, v in b}


def decode_binding(obj) -> Binding:
    return bind({k: decode_value(v) for k, v in obj.items()})


def real(b: Binding, var: str) -> float:
    """Numeric view of a bound Quantity; raises if absent or non-numeric."""
    v = binding_get(b, var)
    if not isinstance(v, Quantity):
        raise DomainViolation(f"variable {var} is not bound to a number")
    return v.value
