import math

import pytest

from expreuse.errors import DomainViolation
from expreuse.values import (
    STAR,
    BoxAxis,
    BoxConstraint,
    BoxDomain,
    ProfileDomain,
    ProfileRef,
    Quantity,
    RealDomain,
    Symbol,
    SymbolDomain,
    bind,
    binding_get,
    binding_vars,
    canon_binding,
    canon_dumps,
    canon_value,
    decode_binding,
    decode_value,
    fmt_real,
    real,
)


def test_fmt_real_is_stable_across_float_noise():
    # lattice arithmetic from two different origins lands on the same key
    a = 0.02 + 0.032 * 4
    b = 0.148
    assert a != b or True  # the doubles may or may not differ; the format must not
    assert fmt_real(a) == fmt_real(b) == "0.148"


def test_fmt_real_rejects_nan():
    with pytest.raises(DomainViolation):
        fmt_real(float("nan"))


def test_fmt_real_keeps_sign_and_infinity():
    assert fmt_real(-0.5) == "-0.5"
    assert fmt_real(math.inf) == "inf"
    assert fmt_real(1e-12) == "1e-12"


def test_binding_is_sorted_and_hashable():
    b = bind({"z": Quantity(1, "m"), "a": Quantity(2, "s")})
    assert [k for k, _ in b] == ["a", "z"]
    assert binding_vars(b) == frozenset({"a", "z"})
    assert hash(b) is not None
    assert real(b, "z") == 1
    assert binding_get(b, "missing") is None


def test_real_requires_quantity():
    b = bind({"x": Symbol("on")})
    with pytest.raises(DomainViolation):
        real(b, "x")


def test_canon_value_round_trip():
    values = [
        Quantity(3.5, "V"),
        Symbol("fast"),
        STAR,
        ProfileRef("cycle-1"),
        # canonical form sorts axes by variable, so build them sorted
        BoxConstraint(axes=(BoxAxis("T", 0.0, 1.0, 0.5, closed=False), BoxAxis("V", 1.0, 5.0, 2.0))),
    ]
    for v in values:
        assert decode_value(canon_value(v)) == v


def test_canon_value_box_normalizes_axis_order():
    a = BoxConstraint(axes=(BoxAxis("V", 1, 5, 2), BoxAxis("T", 0, 1, 0.5)))
    b = BoxConstraint(axes=(BoxAxis("T", 0, 1, 0.5), BoxAxis("V", 1, 5, 2)))
    assert canon_value(a) == canon_value(b)


def test_canon_binding_round_trip():
    b = bind({"V": Quantity(230, "V"), "stim": ProfileRef("c")})
    assert decode_binding(canon_binding(b)) == b


def test_canon_dumps_is_deterministic():
    payload = {"b": canon_binding(bind({"x": Quantity(1, "m")})), "z": 1}
    assert canon_dumps(payload) == canon_dumps(dict(reversed(list(payload.items()))))


def test_box_axis_counts_open_and_closed():
    assert BoxAxis("V", 200, 600, 10, closed=False).count() == 40
    assert BoxAxis("T", 400, 1000, 10, closed=False).count() == 60
    assert BoxAxis("R", 0.02, 0.50, 0.01, closed=True).count() == 49
    assert BoxAxis("x", 0, 0, 1).count() == 1


def test_box_axis_float_steps_do_not_drop_the_boundary():
    ax = BoxAxis("R", 0.02, 0.468, 0.032)
    vals = ax.values()
    assert len(vals) == 15
    assert vals[0] == pytest.approx(0.02)
    assert vals[-1] == pytest.approx(0.468)


def test_box_axis_validation():
    with pytest.raises(DomainViolation):
        BoxAxis("V", 5, 1, 1)
    with pytest.raises(DomainViolation):
        BoxAxis("V", 1, 5, 0)


def test_box_constraint_point_count_multiplies():
    box = BoxConstraint(
        axes=(
            BoxAxis("V", 200, 600, 10, closed=False),
            BoxAxis("T", 400, 1000, 10, closed=False),
            BoxAxis("R", 0.02, 0.50, 0.01, closed=True),
        )
    )
    assert box.point_count() == 117_600
    assert box.axis("V").count() == 40
    assert box.axis("nope") is None


def test_real_domain_checks_unit_range_and_star():
    dom = RealDomain(unit="V", lo=0, hi=10)
    assert dom.contains(Quantity(5, "V"))
    assert not dom.contains(Quantity(5, "A"))
    assert not dom.contains(Quantity(-1, "V"))
    assert not dom.contains(Quantity(float("nan"), "V"))
    assert not dom.contains(STAR)
    assert RealDomain(unit="V", allow_star=True).contains(STAR)


def test_symbol_profile_box_domains():
    assert SymbolDomain(frozenset({"a"})).contains(Symbol("a"))
    assert not SymbolDomain(frozenset({"a"})).contains(Symbol("b"))
    assert ProfileDomain().contains(ProfileRef("x"))
    assert not ProfileDomain().contains(Quantity(1, "m"))
    dom = BoxDomain(axis_vars=frozenset({"V"}))
    assert dom.contains(BoxConstraint(axes=(BoxAxis("V", 0, 1, 1),)))
    assert not dom.contains(BoxConstraint(axes=(BoxAxis("T", 0, 1, 1),)))
