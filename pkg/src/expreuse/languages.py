"""Language definitions and the items exchanged between layers.

Three layers, three item kinds:

* user layer:          Query  -> Answer
* decomposition layer: Request -> Response
* execution layer:     ExperimentSpec -> ExperimentResult

A registry holds the immutable language definitions plus one
LanguageStructure per query language wiring the layer transition rules
(decompose / aggregate / complete / compute / execute) together with a
ground-truth predicate used by compatibility checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from .errors import (
    DomainViolation,
    DuplicateId,
    MalformedLanguage,
    NoCompleter,
    NoDecomposer,
    SchemeMismatch,
    UnknownLanguage,
)
from .values import (
    Binding,
    STAR,
    ValueDomain,
    binding_get,
    binding_vars,
    canon_binding,
    canon_dumps,
    decode_binding,
)

# --- answers ----------------------------------------------------------------

FrontPoint = Binding  # one fully-determined configuration with its outputs


@dataclass(frozen=True)
class BindingSet:
    """Answer holding a set of variable bindings (e.g. a Pareto front).

    ``all_skipped`` flags the degenerate case where every candidate was
    excluded symbolically before filtering, so the empty set is explained
    rather than silent.
    """

    points: tuple[FrontPoint, ...]
    all_skipped: bool = False


Answer = Union[bool, BindingSet]


@dataclass(frozen=True)
class BoolAnswerDomain:
    def contains(self, a: Answer) -> bool:
        return isinstance(a, bool)


@dataclass(frozen=True)
class BindingSetAnswerDomain:
    point_vars: frozenset[str]

    def contains(self, a: Answer) -> bool:
        if not isinstance(a, BindingSet):
            return False
        return all(binding_vars(p) == self.point_vars for p in a.points)


AnswerDomain = Union[BoolAnswerDomain, BindingSetAnswerDomain]


def canon_answer(a: Answer):
    if isinstance(a, bool):
        return {"b": a}
    if isinstance(a, BindingSet):
        return {
            "set": sorted((canon_dumps(canon_binding(p)) for p in a.points)),
            "all_skipped": a.all_skipped,
        }
    raise DomainViolation(f"unsupported answer {a!r}")


def answers_equal(a: Answer, b: Answer) -> bool:
    return canon_answer(a) == canon_answer(b)


# --- language definitions ---------------------------------------------------

@dataclass(frozen=True)
class QueryLanguage:
    id: str
    variables: frozenset[str]
    schemes: frozenset[frozenset[str]]
    domains: Mapping[str, ValueDomain]
    answers: AnswerDomain


@dataclass(frozen=True)
class RequestLanguage:
    id: str
    variables: frozenset[str]
    poi_vars: frozenset[str]
    domains: Mapping[str, ValueDomain]
    poi_domains: Mapping[str, ValueDomain]


@dataclass(frozen=True)
class SpecLanguage:
    """Execution-layer language: spec kinds with a partial order.

    ``kind_rank`` induces the order (a <= b iff a == b or rank[a] < rank[b];
    kinds sharing a rank are incomparable). Only kinds in ``result_kinds``
    produce a stored result; the others are preparatory steps that the
    reference executor folds into the result-producing run.
    """

    id: str
    kind_rank: Mapping[str, int]
    result_kinds: frozenset[str]
    result_schema: tuple[tuple[str, str], ...]  # (signal, unit)
    domains: Mapping[str, ValueDomain]

    def le(self, a: str, b: str) -> bool:
        if a not in self.kind_rank or b not in self.kind_rank:
            raise DomainViolation(f"unknown spec kind {a!r} or {b!r}")
        return a == b or self.kind_rank[a] < self.kind_rank[b]


# --- items ------------------------------------------------------------------

@dataclass(frozen=True)
class Query:
    language_id: str
    binding: Binding

    def __getitem__(self, var: str):
        return binding_get(self.binding, var)


@dataclass(frozen=True)
class Request:
    language_id: str
    binding: Binding
    poi: frozenset[str]

    def __getitem__(self, var: str):
        return binding_get(self.binding, var)


@dataclass(frozen=True)
class Response:
    values: Binding  # over exactly the request's poi
    skipped: bool = False  # symbolic exclusion marker; values then advisory


@dataclass(frozen=True)
class ExperimentSpec:
    language_id: str
    kind: str
    params: Binding
    origin_request: str | None = None
    origin_query: str | None = None
    frame: str | None = None  # opaque validity-frame tag


@dataclass(frozen=True)
class TraceSeries:
    times: np.ndarray
    values: np.ndarray

    @property
    def nbytes(self) -> int:
        return int(self.times.nbytes + self.values.nbytes)

    def final(self) -> float:
        return float(self.values[-1])

    def __eq__(self, other) -> bool:  # arrays break default dataclass eq
        if not isinstance(other, TraceSeries):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(
            self.values, other.values
        )


@dataclass
class ExperimentResult:
    traces: dict[str, TraceSeries]
    dt: float
    wall_time: float = 0.0

    @property
    def nbytes(self) -> int:
        return sum(t.nbytes for t in self.traces.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExperimentResult):
            return NotImplemented
        return self.dt == other.dt and self.traces == other.traces


# --- canonical keys ----------------------------------------------------------

def query_key(q: Query) -> str:
    return canon_dumps({"l": q.language_id, "b": canon_binding(q.binding)})


def request_key(r: Request) -> str:
    return canon_dumps(
        {"l": r.language_id, "b": canon_binding(r.binding), "poi": sorted(r.poi)}
    )


def spec_key(e: ExperimentSpec) -> str:
    # identity excludes origin and frame: the same experiment reached from
    # different requests must collide so its result is shared
    return canon_dumps(
        {"l": e.language_id, "k": e.kind, "p": canon_binding(e.params)}
    )


def response_canon(rsp: Response):
    return {"v": canon_binding(rsp.values), "skip": rsp.skipped}


def responses_equal(a: Response, b: Response) -> bool:
    return response_canon(a) == response_canon(b)


# --- decoding (journal replay and the wire format) ----------------------------

def decode_answer(obj) -> Answer:
    import json

    if "b" in obj:
        return bool(obj["b"])
    if "set" in obj:
        points = tuple(decode_binding(json.loads(s)) for s in obj["set"])
        return BindingSet(points=points, all_skipped=bool(obj.get("all_skipped", False)))
    raise DomainViolation(f"undecodable answer {obj!r}")


def decode_response(obj) -> Response:
    return Response(values=decode_binding(obj["v"]), skipped=bool(obj.get("skip", False)))


def decode_query(obj) -> Query:
    return Query(language_id=obj["l"], binding=decode_binding(obj["b"]))


def decode_request(obj) -> Request:
    return Request(
        language_id=obj["l"],
        binding=decode_binding(obj["b"]),
        poi=frozenset(obj["poi"]),
    )


def decode_spec(obj) -> ExperimentSpec:
    return ExperimentSpec(
        language_id=obj["l"],
        kind=obj["k"],
        params=decode_binding(obj["p"]),
        origin_request=obj.get("oq_r"),
        origin_query=obj.get("oq_q"),
        frame=obj.get("frame"),
    )


# --- language structure -------------------------------------------------------

Fulfilment = tuple[Request, Response]


@dataclass
class LanguageStructure:
    """Transition rules wiring one query language through to execution."""

    query_language_id: str
    request_language_id: str
    spec_language_id: str
    decompose: Callable[[Query], list[Request]]
    aggregate: Callable[[Query, list[Fulfilment]], Answer]
    complete: Callable[[Request], list[ExperimentSpec]]
    compute: Callable[[Request, list[ExperimentResult]], Response]
    execute: Callable[[ExperimentSpec], ExperimentResult]
    answered_by: Callable[[Query, Answer], bool] | None = None


class LanguageRegistry:
    """Holds immutable language definitions and their structures."""

    def __init__(self) -> None:
        self._query: dict[str, QueryLanguage] = {}
        self._request: dict[str, RequestLanguage] = {}
        self._spec: dict[str, SpecLanguage] = {}
        self._structures: dict[str, LanguageStructure] = {}

    # -- registration

    def register_query_language(self, lang: QueryLanguage) -> None:
        self._check_new_id(lang.id)
        if not lang.variables:
            raise MalformedLanguage(f"{lang.id}: no variables")
        if not lang.schemes:
            raise MalformedLanguage(f"{lang.id}: no schemes")
        for scheme in lang.schemes:
            if not scheme or not scheme <= lang.variables:
                raise MalformedLanguage(f"{lang.id}: scheme {set(scheme)} not a nonempty variable subset")
        if set(lang.domains) != set(lang.variables):
            raise MalformedLanguage(f"{lang.id}: domain map must cover exactly the variables")
        self._query[lang.id] = lang

    def register_request_language(self, lang: RequestLanguage) -> None:
        self._check_new_id(lang.id)
        if not lang.variables or not lang.poi_vars:
            raise MalformedLanguage(f"{lang.id}: variables and poi variables must be nonempty")
        if set(lang.domains) != set(lang.variables) or set(lang.poi_domains) != set(lang.poi_vars):
            raise MalformedLanguage(f"{lang.id}: domain maps must cover the variable sets")
        self._request[lang.id] = lang

    def register_spec_language(self, lang: SpecLanguage) -> None:
        self._check_new_id(lang.id)
        if not lang.kind_rank:
            raise MalformedLanguage(f"{lang.id}: no spec kinds")
        if not lang.result_kinds <= set(lang.kind_rank):
            raise MalformedLanguage(f"{lang.id}: result kinds must be declared kinds")
        if not lang.result_kinds:
            raise MalformedLanguage(f"{lang.id}: at least one kind must produce results")
        self._spec[lang.id] = lang

    def register_structure(self, s: LanguageStructure) -> None:
        if s.query_language_id in self._structures:
            raise DuplicateId(f"structure for {s.query_language_id} already registered")
        # all three languages must exist
        self.query_language(s.query_language_id)
        self.request_language(s.request_language_id)
        self.spec_language(s.spec_language_id)
        self._structures[s.query_language_id] = s

    def _check_new_id(self, lang_id: str) -> None:
        if lang_id in self._query or lang_id in self._request or lang_id in self._spec:
            raise DuplicateId(f"language id {lang_id!r} already registered")

    # -- lookup

    def query_language(self, lang_id: str) -> QueryLanguage:
        try:
            return self._query[lang_id]
        except KeyError:
            raise UnknownLanguage(f"unknown query language {lang_id!r}") from None

    def request_language(self, lang_id: str) -> RequestLanguage:
        try:
            return self._request[lang_id]
        except KeyError:
            raise UnknownLanguage(f"unknown request language {lang_id!r}") from None

    def spec_language(self, lang_id: str) -> SpecLanguage:
        try:
            return self._spec[lang_id]
        except KeyError:
            raise UnknownLanguage(f"unknown spec language {lang_id!r}") from None

    def query_language_ids(self) -> list[str]:
        return list(self._query)

    def structure_for(self, query_language_id: str) -> LanguageStructure:
        if query_language_id not in self._query:
            raise UnknownLanguage(f"unknown query language {query_language_id!r}")
        try:
            return self._structures[query_language_id]
        except KeyError:
            raise NoDecomposer(f"no structure registered for {query_language_id!r}") from None

    def completer_for(self, request_language_id: str) -> LanguageStructure:
        if request_language_id not in self._request:
            raise UnknownLanguage(f"unknown request language {request_language_id!r}")
        for s in self._structures.values():
            if s.request_language_id == request_language_id:
                return s
        raise NoCompleter(f"no completion rule for {request_language_id!r}")

    def structures(self) -> list[LanguageStructure]:
        return list(self._structures.values())


# --- validation ---------------------------------------------------------------

def validate_query(registry: LanguageRegistry, q: Query) -> None:
    lang = registry.query_language(q.language_id)
    bound = binding_vars(q.binding)
    if bound not in lang.schemes:
        raise SchemeMismatch(
            f"{q.language_id}: bound variables {sorted(bound)} match no scheme"
        )
    for var, value in q.binding:
        if not lang.domains[var].contains(value):
            raise DomainViolation(f"{q.language_id}: {var} = {value!r} outside domain")


def validate_request(registry: LanguageRegistry, r: Request) -> None:
    lang = registry.request_language(r.language_id)
    if binding_vars(r.binding) != lang.variables:
        raise DomainViolation(f"{r.language_id}: request binding must be total")
    if not r.poi or not r.poi <= lang.poi_vars:
        raise DomainViolation(f"{r.language_id}: poi must be a nonempty subset of poi variables")
    for var, value in r.binding:
        if not lang.domains[var].contains(value):
            raise DomainViolation(f"{r.language_id}: {var} = {value!r} outside domain")


def validate_response(registry: LanguageRegistry, r: Request, rsp: Response) -> None:
    if binding_vars(rsp.values) != r.poi:
        raise DomainViolation("response must bind exactly the request poi")
    if rsp.skipped:
        return  # marker response; values are advisory
    lang = registry.request_language(r.language_id)
    for var, value in rsp.values:
        if not lang.poi_domains[var].contains(value):
            raise DomainViolation(f"{r.language_id}: poi {var} = {value!r} outside domain")


def validate_spec(registry: LanguageRegistry, e: ExperimentSpec) -> None:
    lang = registry.spec_language(e.language_id)
    if e.kind not in lang.kind_rank:
        raise DomainViolation(f"{e.language_id}: unknown spec kind {e.kind!r}")
    for var, value in e.params:
        if value is STAR:
            raise DomainViolation(f"{e.language_id}: spec parameter {var} is under-specified")
        dom = lang.domains.get(var)
        if dom is not None and not dom.contains(value):
            raise DomainViolation(f"{e.language_id}: {var} = {value!r} outside domain")
