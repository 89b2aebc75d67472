"""Language registration, canonical keys, and validation rules."""

import pytest

from expreuse.errors import (
    DomainViolation,
    DuplicateId,
    MalformedLanguage,
    SchemeMismatch,
    UnknownLanguage,
)
from expreuse.languages import (
    BindingSet,
    BoolAnswerDomain,
    ExperimentSpec,
    Query,
    QueryLanguage,
    Request,
    Response,
    answers_equal,
    canon_answer,
    decode_answer,
    decode_query,
    decode_request,
    decode_response,
    decode_spec,
    query_key,
    request_key,
    responses_equal,
    spec_key,
    validate_query,
    validate_request,
    validate_response,
    validate_spec,
)
from expreuse.train import QL_ENG, RL_STOP, SL_SIM, eng_query
from expreuse.values import Quantity, RealDomain, bind, canon_binding


def test_registry_rejects_duplicate_ids(registry):
    lang = QueryLanguage(
        id=QL_ENG,
        variables=frozenset({"x"}),
        schemes=frozenset({frozenset({"x"})}),
        domains={"x": RealDomain()},
        answers=BoolAnswerDomain(),
    )
    with pytest.raises(DuplicateId):
        registry.register_query_language(lang)


def test_registry_rejects_malformed_language(registry):
    with pytest.raises(MalformedLanguage):
        registry.register_query_language(
            QueryLanguage(
                id="broken",
                variables=frozenset({"x"}),
                schemes=frozenset({frozenset({"y"})}),  # not a subset
                domains={"x": RealDomain()},
                answers=BoolAnswerDomain(),
            )
        )


def test_unknown_language_lookup_raises(registry):
    with pytest.raises(UnknownLanguage):
        registry.query_language("nope")
    with pytest.raises(UnknownLanguage):
        registry.structure_for("nope")


def test_query_key_is_binding_order_independent():
    a = Query(language_id=QL_ENG, binding=bind({"m": Quantity(1, "kg"), "v": Quantity(2, "km/h")}))
    b = Query(language_id=QL_ENG, binding=bind({"v": Quantity(2, "km/h"), "m": Quantity(1, "kg")}))
    assert query_key(a) == query_key(b)


def test_request_key_includes_poi():
    b = bind({"x": Quantity(1, "m")})
    r1 = Request(language_id=RL_STOP, binding=b, poi=frozenset({"stopDist"}))
    r2 = Request(language_id=RL_STOP, binding=b, poi=frozenset())
    assert request_key(r1) != request_key(r2)


def test_spec_key_ignores_origin_and_frame():
    params = bind({"m": Quantity(1, "kg")})
    a = ExperimentSpec(language_id=SL_SIM, kind="Simulate", params=params)
    b = ExperimentSpec(
        language_id=SL_SIM,
        kind="Simulate",
        params=params,
        origin_request="rk",
        origin_query="qk",
        frame="f0",
    )
    assert spec_key(a) == spec_key(b)


def test_answers_equal_handles_both_kinds():
    assert answers_equal(True, True)
    assert not answers_equal(True, False)
    p = bind({"SoC": Quantity(75, "%")})
    assert answers_equal(BindingSet(points=(p,)), BindingSet(points=(p,)))
    assert not answers_equal(BindingSet(points=(p,)), BindingSet(points=()))
    assert not answers_equal(BindingSet(points=()), BindingSet(points=(), all_skipped=True))


def test_responses_equal_includes_skip_flag():
    v = bind({"stopDist": Quantity(5, "m")})
    assert responses_equal(Response(values=v), Response(values=v))
    assert not responses_equal(Response(values=v), Response(values=v, skipped=True))


def test_validate_query_rejects_off_scheme_bindings(registry):
    q = Query(language_id=QL_ENG, binding=bind({"m": Quantity(1000, "kg")}))
    with pytest.raises(SchemeMismatch):
        validate_query(registry, q)


def test_validate_query_rejects_out_of_domain(registry):
    q = eng_query(m=-10, F_B=0.1, v=100, mu=0.5, theta=0, dist=100)
    with pytest.raises((DomainViolation, SchemeMismatch)):
        validate_query(registry, q)


def test_validate_query_rejects_wrong_unit(registry):
    good = eng_query(m=1000, F_B=0.1, v=100, mu=0.5, theta=0, dist=100)
    swapped = bind({**dict(good.binding), "m": Quantity(1000, "m")})
    with pytest.raises(DomainViolation):
        validate_query(registry, Query(language_id=QL_ENG, binding=swapped))


def test_validate_request_checks_poi_membership(registry):
    r = Request(
        language_id=RL_STOP,
        binding=bind(
            {
                "m": Quantity(1000, "kg"),
                "F_B": Quantity(0.1, "1"),
                "v": Quantity(100, "km/h"),
                "mu": Quantity(0.5, "1"),
                "theta": Quantity(0, "deg"),
            }
        ),
        poi=frozenset({"notAVar"}),
    )
    with pytest.raises(DomainViolation):
        validate_request(registry, r)


def test_validate_response_poi_exactness(registry):
    r = Request(
        language_id=RL_STOP,
        binding=bind(
            {
                "m": Quantity(1000, "kg"),
                "F_B": Quantity(0.1, "1"),
                "v": Quantity(100, "km/h"),
                "mu": Quantity(0.5, "1"),
                "theta": Quantity(0, "deg"),
            }
        ),
        poi=frozenset({"stopDist"}),
    )
    ok = Response(values=bind({"stopDist": Quantity(12.0, "m")}))
    validate_response(registry, r, ok)
    with pytest.raises(DomainViolation):
        validate_response(registry, r, Response(values=bind({})))
    # skipped responses bypass domain checks but still bind the poi
    validate_response(registry, r, Response(values=bind({"stopDist": Quantity(-1, "m")}), skipped=True))
    with pytest.raises(DomainViolation):
        validate_response(registry, r, Response(values=bind({"stopDist": Quantity(-1, "m")})))


def test_validate_spec_requires_known_kind_and_full_params(registry):
    params = bind(
        {
            "m": Quantity(1000, "kg"),
            "F_B": Quantity(0.1, "1"),
            "v": Quantity(100, "km/h"),
            "mu": Quantity(0.5, "1"),
            "theta": Quantity(0, "deg"),
        }
    )
    validate_spec(registry, ExperimentSpec(language_id=SL_SIM, kind="Simulate", params=params))
    with pytest.raises(DomainViolation):
        validate_spec(registry, ExperimentSpec(language_id=SL_SIM, kind="Warp", params=params))


def test_decode_round_trips(registry):
    q = eng_query(m=2000, F_B=0.2, v=80, mu=0.4, theta=1, dist=500)
    assert decode_query({"l": q.language_id, "b": canon_binding(q.binding)}) == q

    r = Request(language_id=RL_STOP, binding=q.binding, poi=frozenset({"stopDist"}))
    enc = {"l": r.language_id, "b": canon_binding(r.binding), "poi": sorted(r.poi)}
    assert decode_request(enc) == r

    rsp = Response(values=bind({"stopDist": Quantity(9.25, "m")}), skipped=True)
    assert decode_response({"v": canon_binding(rsp.values), "skip": True}) == rsp

    assert decode_answer(canon_answer(True)) is True
    front = BindingSet(points=(bind({"SoC": Quantity(75, "%")}),), all_skipped=False)
    assert decode_answer(canon_answer(front)) == front

    e = ExperimentSpec(language_id=SL_SIM, kind="Simulate", params=q.binding, origin_request="rk")
    enc = {"l": e.language_id, "k": e.kind, "p": canon_binding(e.params), "oq_r": "rk"}
    assert decode_spec(enc) == e
