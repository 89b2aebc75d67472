"""Reuse engine: answers queries against the store before executing.

Mechanism precedence at every layer, strictly in this order:

1. direct        -- same key already stored; hand the stored outcome back
2. symbolic      -- a justification rule derives the outcome from a stored
                    entry (store gains a derived entry referencing it)
3. fuzzy retrieval -- nearest stored entry within the retrieval threshold;
                    its outcome is borrowed as-is and the store is NOT
                    updated (an approximation, flagged in the event log)
4. fuzzy recomputation -- nearest stored entry within the recomputation
                    threshold whose evidence suffices to rebuild the
                    outcome for the new subject; the store gains the
                    rebuilt entry

The execution layer stops at 3: a result cannot be recomputed without
performing the experiment. Ties are broken by smallest distance, then
earliest stored timestamp.

Candidate search runs over per-(layer, language) column indexes kept in
step with the store through its listener hook; the scalar scheme functions
re-verify every vectorized match before it is used.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import EmptyDecomposition, EmptyResults
from .languages import (
    Answer,
    ExperimentResult,
    ExperimentSpec,
    Fulfilment,
    LanguageRegistry,
    Query,
    Request,
    Response,
    query_key,
    request_key,
    spec_key,
    validate_query,
    validate_request,
    validate_response,
    validate_spec,
)
from .values import binding_vars
from .reasoning import (
    EVIDENCE_FULFILMENTS,
    EVIDENCE_RESULTS,
    LAYER_DECOMPOSITION,
    LAYER_EXECUTION,
    LAYER_USER,
    ReasoningScheme,
    scaled_chebyshev_rows,
)
from .store import (
    ExperimentStore,
    MECH_DIRECT,
    MECH_EXECUTED,
    MECH_FUZZY_RECOMPUTATION,
    MECH_FUZZY_RETRIEVAL,
    MECH_SYMBOLIC,
)

_RELATION_LAYER = {
    "answers": LAYER_USER,
    "responses": LAYER_DECOMPOSITION,
    "results": LAYER_EXECUTION,
}


@dataclass(frozen=True)
class ReuseEvent:
    seq: int
    ts: float
    kind: str  # reuse | execute | process
    layer: str
    language: str
    mechanism: str
    subject: str
    source: str | None = None
    distance: float | None = None

    def to_dict(self) -> dict:
        d = {
            "seq": self.seq,
            "ts": self.ts,
            "kind": self.kind,
            "layer": self.layer,
            "language": self.language,
            "mechanism": self.mechanism,
            "subject": self.subject,
        }
        if self.source is not None:
            d["source"] = self.source
        if self.distance is not None and math.isfinite(self.distance):
            d["distance"] = self.distance
        return d


class EventLog:
    """Sequence-numbered event buffer with optional JSONL sink."""

    def __init__(self, *, capacity: int = 200_000, sink_path: str | None = None) -> None:
        self._events: list[ReuseEvent] = []
        self._capacity = capacity
        self._next = 1
        self._lock = threading.Lock()
        self._sink = open(sink_path, "a") if sink_path else None
        self._subscribers: list[Callable[[ReuseEvent], None]] = []

    def emit(self, **kw) -> ReuseEvent:
        with self._lock:
            ev = ReuseEvent(seq=self._next, ts=time.time(), **kw)
            self._next += 1
            self._events.append(ev)
            if len(self._events) > self._capacity:
                del self._events[: len(self._events) - self._capacity]
            subscribers = list(self._subscribers)
        if self._sink is not None:
            self._sink.write(json.dumps(ev.to_dict()) + "\n")
            self._sink.flush()
        for fn in subscribers:
            fn(ev)
        return ev

    def since(self, seq: int) -> list[ReuseEvent]:
        with self._lock:
            return [e for e in self._events if e.seq > seq]

    @property
    def last_seq(self) -> int:
        return self._next - 1

    def subscribe(self, fn: Callable[[ReuseEvent], None]) -> None:
        with self._lock:
            self._subscribers.append(fn)

    def unsubscribe(self, fn: Callable[[ReuseEvent], None]) -> None:
        with self._lock:
            if fn in self._subscribers:
                self._subscribers.remove(fn)

    def close(self) -> None:
        if self._sink is not None:
            self._sink.close()


class _ColumnIndex:
    """Feature rows for one (layer, language), kept in step with the store."""

    def __init__(self, scheme: ReasoningScheme) -> None:
        self.scheme = scheme
        self.keys: list[str] = []
        self.ts: list[float] = []
        self._rows = np.empty((0, len(scheme.feature_names)))
        self._used = 0
        self._dirty = False

    def add(self, key: str, ts: float, subject) -> None:
        row = self.scheme.vector(subject)
        if self._used == len(self._rows):
            grown = np.empty((max(64, 2 * len(self._rows)), self._rows.shape[1]))
            grown[: self._used] = self._rows[: self._used]
            self._rows = grown
        self._rows[self._used] = row
        self._used += 1
        self.keys.append(key)
        self.ts.append(ts)

    def mark_removed(self, key: str) -> None:
        self._dirty = True

    def rebuild(self, entries: Iterable) -> None:
        self.keys, self.ts = [], []
        self._rows = np.empty((0, len(self.scheme.feature_names)))
        self._used = 0
        for key, ts, subject in entries:
            self.add(key, ts, subject)
        self._dirty = False

    @property
    def dirty(self) -> bool:
        return self._dirty

    def matrix(self) -> np.ndarray:
        return self._rows[: self._used]


@dataclass
class ProcessReport:
    answer: Answer
    executed: int
    reused: dict[str, int]
    fulfilments: list[Fulfilment]
    wall_time: float
    first_seq: int
    last_seq: int

    def mechanism(self) -> str:
        """Top-level mechanism that settled the query."""
        for m in (MECH_DIRECT, MECH_SYMBOLIC, MECH_FUZZY_RETRIEVAL, MECH_FUZZY_RECOMPUTATION):
            if self.reused.get(f"{LAYER_USER}/{m}"):
                return m
        return MECH_EXECUTED


@dataclass
class _Hit:
    mechanism: str
    outcome: object
    source_key: str | None
    distance: float | None
    borrowed_subject: object | None = None


class ReuseEngine:
    """Ties registry, store, and schemes into the query-answering loop."""

    def __init__(
        self,
        registry: LanguageRegistry,
        store: ExperimentStore,
        schemes: Iterable[ReasoningScheme] = (),
        *,
        reuse_enabled: bool = True,
        record: bool = True,
        events: EventLog | None = None,
    ) -> None:
        self.registry = registry
        self.store = store
        self.reuse_enabled = reuse_enabled
        self.record = record
        self.events = events or EventLog()
        self.executed_total = 0
        self._schemes: dict[tuple[str, str], ReasoningScheme] = {}
        self._indexes: dict[tuple[str, str], _ColumnIndex] = {}
        for s in schemes:
            self.add_scheme(s)
        store.add_listener(self._on_store_change)
        self._seed_indexes()

    # -- scheme and index upkeep

    def add_scheme(self, scheme: ReasoningScheme) -> None:
        key = (scheme.layer, scheme.language_id)
        self._schemes[key] = scheme
        self._indexes[key] = _ColumnIndex(scheme)

    def scheme_map(self) -> dict[tuple[str, str], ReasoningScheme]:
        return dict(self._schemes)

    def _seed_indexes(self) -> None:
        for entry in self.store.answers_entries():
            self._index_add(LAYER_USER, entry.query.language_id, entry.key, entry.ts, entry.query)
        for entry in self.store.responses_entries():
            self._index_add(
                LAYER_DECOMPOSITION, entry.request.language_id, entry.key, entry.ts, entry.request
            )
        for entry in self.store.results_entries():
            self._index_add(LAYER_EXECUTION, entry.spec.language_id, entry.key, entry.ts, entry.spec)

    def _on_store_change(self, event: str, relation: str, item) -> None:
        layer = _RELATION_LAYER.get(relation)
        if layer is None:
            return
        if event == "add":
            subject = {"answers": lambda e: e.query, "responses": lambda e: e.request, "results": lambda e: e.spec}[relation](item)
            self._index_add(layer, subject.language_id, item.key, item.ts, subject)
        elif event == "remove":
            for idx in self._indexes.values():
                if item in idx.keys:
                    idx.mark_removed(item)

    def _index_add(self, layer: str, language_id: str, key: str, ts: float, subject) -> None:
        idx = self._indexes.get((layer, language_id))
        if idx is not None:
            idx.add(key, ts, subject)

    def _index_for(self, layer: str, language_id: str) -> _ColumnIndex | None:
        idx = self._indexes.get((layer, language_id))
        if idx is None:
            return None
        if idx.dirty:
            idx.rebuild(self._live_entries(layer, language_id))
        return idx

    def _live_entries(self, layer: str, language_id: str):
        if layer == LAYER_USER:
            return [
                (e.key, e.ts, e.query)
                for e in self.store.answers_entries()
                if e.query.language_id == language_id
            ]
        if layer == LAYER_DECOMPOSITION:
            return [
                (e.key, e.ts, e.request)
                for e in self.store.responses_entries()
                if e.request.language_id == language_id
            ]
        return [
            (e.key, e.ts, e.spec)
            for e in self.store.results_entries()
            if e.spec.language_id == language_id
        ]

    # -- generic reuse search

    def _lookup_entry(self, layer: str, key: str):
        if layer == LAYER_USER:
            return self.store.get_answer_entry(key)
        if layer == LAYER_DECOMPOSITION:
            return self.store.get_response_entry(key)
        return self.store.get_result_entry(key)

    @staticmethod
    def _entry_parts(layer: str, entry):
        if layer == LAYER_USER:
            return entry.query, entry.answer
        if layer == LAYER_DECOMPOSITION:
            return entry.request, entry.response
        return entry.spec, None

    def _candidates(self, idx: _ColumnIndex, x: np.ndarray, scales, threshold: float):
        """Row order of matches: ascending distance, then earliest timestamp."""
        d = scaled_chebyshev_rows(idx.matrix(), x, scales)
        rows = np.nonzero(d < threshold)[0]
        order = sorted(rows, key=lambda r: (d[r], idx.ts[r]))
        return [(idx.keys[r], float(d[r])) for r in order]

    def _try_symbolic(self, layer: str, subject, idx: _ColumnIndex | None):
        scheme = idx.scheme if idx is not None else None
        if idx is None or scheme is None or scheme.justify is None:
            return None
        matrix = idx.matrix()
        if scheme.justify_prefilter is not None and len(matrix):
            mask = scheme.justify_prefilter(matrix, scheme.vector(subject))
            rows = np.nonzero(mask)[0]
        else:
            rows = range(len(matrix))
        for r in sorted(rows, key=lambda r: idx.ts[r]):
            entry = self._lookup_entry(layer, idx.keys[r])
            if entry is None:
                continue
            stored_subject, stored_outcome = self._entry_parts(layer, entry)
            evidence = self._fetch_evidence(scheme.justify_evidence, layer, entry)
            derived = scheme.justify(stored_subject, stored_outcome, subject, evidence)
            if derived is not None:
                return _Hit(MECH_SYMBOLIC, derived, entry.key, None)
        return None

    def _try_retrieval(self, layer: str, subject, idx: _ColumnIndex | None):
        scheme = idx.scheme if idx is not None else None
        if idx is None or scheme is None or scheme.get_scales is None:
            return None
        for key, dist in self._candidates(
            idx, scheme.vector(subject), scheme.get_scales, scheme.t_retrieve
        ):
            entry = self._lookup_entry(layer, key)
            if entry is None:
                continue
            stored_subject, stored_outcome = self._entry_parts(layer, entry)
            if scheme.get_distance(stored_subject, subject) >= scheme.t_retrieve:
                continue  # vector row disagreed with the authoritative metric
            if layer == LAYER_DECOMPOSITION and not subject.poi <= binding_vars(
                stored_outcome.values
            ):
                continue  # borrowed response must answer everything asked for
            if layer == LAYER_EXECUTION:
                stored_outcome = self.store.result_payload(entry)
                if stored_outcome is None:
                    continue
            return _Hit(MECH_FUZZY_RETRIEVAL, stored_outcome, key, dist, stored_subject)
        return None

    def _try_recompute(self, layer: str, subject, idx: _ColumnIndex | None):
        scheme = idx.scheme if idx is not None else None
        if idx is None or scheme is None or scheme.recompute is None or scheme.comp_scales is None:
            return None
        for key, dist in self._candidates(
            idx, scheme.vector(subject), scheme.comp_scales, scheme.t_recompute
        ):
            entry = self._lookup_entry(layer, key)
            if entry is None:
                continue
            stored_subject, stored_outcome = self._entry_parts(layer, entry)
            if scheme.comp_distance(stored_subject, subject) >= scheme.t_recompute:
                continue
            evidence = self._fetch_evidence(scheme.recompute_evidence, layer, entry)
            rebuilt = scheme.recompute(stored_subject, stored_outcome, subject, evidence)
            if rebuilt is not None:
                return _Hit(MECH_FUZZY_RECOMPUTATION, rebuilt, key, dist)
        return None

    def _fetch_evidence(self, kind: str | None, layer: str, entry):
        if kind == EVIDENCE_FULFILMENTS and layer == LAYER_USER:
            return self.store.get_responses(entry.query)
        if kind == EVIDENCE_RESULTS and layer == LAYER_DECOMPOSITION:
            return self.store.get_results_for(entry.request)
        return None

    def _reuse(self, layer: str, language_id: str, subject, direct) -> _Hit | None:
        if not self.reuse_enabled:
            return None
        stored = direct()
        if stored is not None:
            return _Hit(MECH_DIRECT, stored, None, 0.0)
        idx = self._index_for(layer, language_id)
        hit = self._try_symbolic(layer, subject, idx)
        if hit is None:
            hit = self._try_retrieval(layer, subject, idx)
        if hit is None and layer != LAYER_EXECUTION:
            hit = self._try_recompute(layer, subject, idx)
        return hit

    def _note(self, layer: str, language: str, mechanism: str, subject_key: str, hit: _Hit | None = None) -> None:
        self.store.stats.count_reuse(layer, mechanism)
        self.events.emit(
            kind="reuse",
            layer=layer,
            language=language,
            mechanism=mechanism,
            subject=subject_key,
            source=hit.source_key if hit else None,
            distance=hit.distance if hit else None,
        )

    # -- execution layer

    def _obtain_result(self, spec: ExperimentSpec, structure) -> tuple[ExperimentResult, bool]:
        """Result for one spec: reuse if possible, else perform it."""
        validate_spec(self.registry, spec)
        skey = spec_key(spec)
        lang = spec.language_id
        hit = self._reuse(
            LAYER_EXECUTION, lang, spec, lambda: self.store.get_result(spec)
        )
        if hit is not None:
            self._note(LAYER_EXECUTION, lang, hit.mechanism, skey, hit)
            return hit.outcome, False
        result = structure.execute(spec)
        self.executed_total += 1
        self.events.emit(
            kind="execute",
            layer=LAYER_EXECUTION,
            language=lang,
            mechanism=MECH_EXECUTED,
            subject=skey,
        )
        if self.record:
            self.store.add_result(spec, result)
        return result, True

    # -- decomposition layer

    def _fulfil(self, request: Request, origin_query: str | None) -> tuple[str, Request, Response, int]:
        """Answer one request; returns (stored key, request used, response, executed count).

        Writes for this branch (response plus complete/compute links) commit
        only after every contributing experiment succeeded; results of the
        experiments that did run are kept even when a later one fails.
        """
        validate_request(self.registry, request)
        rkey = request_key(request)
        rlang = request.language_id
        hit = self._reuse(
            LAYER_DECOMPOSITION, rlang, request, lambda: self.store.get_response(request)
        )
        if hit is not None:
            self._note(LAYER_DECOMPOSITION, rlang, hit.mechanism, rkey, hit)
            if hit.mechanism == MECH_DIRECT:
                return rkey, request, hit.outcome, 0
            if hit.mechanism == MECH_FUZZY_RETRIEVAL:
                # borrowed as-is: the fulfilment is the stored one
                return hit.source_key, hit.borrowed_subject, hit.outcome, 0
            if self.record:
                self.store.add_response(
                    request, hit.outcome, mechanism=hit.mechanism, source_key=hit.source_key
                )
                return rkey, request, hit.outcome, 0
            return rkey, request, hit.outcome, 0

        structure = self.registry.completer_for(rlang)
        plan = structure.complete(request)
        slang = self.registry.spec_language(structure.spec_language_id)
        results: list[ExperimentResult] = []
        plan_record: list[tuple[str, str, bool]] = []
        executed = 0
        for spec in plan:
            if spec.kind not in slang.result_kinds:
                plan_record.append((spec.kind, spec_key(spec), False))
                continue  # preparatory step, folded into the run that follows
            result, ran = self._obtain_result(spec, structure)
            executed += 1 if ran else 0
            results.append(result)
            plan_record.append((spec.kind, spec_key(spec), self.record))
        if not results:
            raise EmptyResults(f"completion of {rkey} produced no experiments")
        response = structure.compute(request, results)
        validate_response(self.registry, request, response)
        if self.record:
            self.store.add_response(request, response, mechanism=MECH_EXECUTED)
            self.store.record_link(
                "complete",
                {"request_key": rkey, "query_key": origin_query, "plan": plan_record},
            )
            self.store.record_link(
                "compute",
                {"request_key": rkey, "spec_keys": [sk for k, sk, stored in plan_record if stored]},
            )
        return rkey, request, response, executed

    # -- user layer

    def process(self, q: Query) -> ProcessReport:
        """Answer a query, reusing stored work wherever the schemes allow."""
        t0 = time.perf_counter()
        first_seq = self.events.last_seq + 1
        validate_query(self.registry, q)
        qkey = query_key(q)
        qlang = q.language_id
        reused_before = dict(self.store.stats.reuse)
        executed = 0

        hit = self._reuse(LAYER_USER, qlang, q, lambda: self.store.get_answer(q))
        if hit is not None:
            self._note(LAYER_USER, qlang, hit.mechanism, qkey, hit)
            if self.record and hit.mechanism in (MECH_SYMBOLIC, MECH_FUZZY_RECOMPUTATION):
                self.store.add_answer(
                    q, hit.outcome, mechanism=hit.mechanism, source_key=hit.source_key
                )
            answer = hit.outcome
            fulfilments: list[Fulfilment] = []
        else:
            structure = self.registry.structure_for(qlang)
            requests = list(structure.decompose(q))
            if not requests:
                raise EmptyDecomposition(f"decomposition of {qkey} is empty")
            fulfilment_keys: list[str] = []
            fulfilments = []
            for request in requests:
                fkey, used_request, response, ran = self._fulfil(request, qkey)
                executed += ran
                fulfilment_keys.append(fkey)
                fulfilments.append((used_request, response))
            answer = structure.aggregate(q, fulfilments)
            self.events.emit(
                kind="process",
                layer=LAYER_USER,
                language=qlang,
                mechanism=MECH_EXECUTED,
                subject=qkey,
            )
            if self.record:
                self.store.add_answer(q, answer, mechanism=MECH_EXECUTED)
                self.store.record_link(
                    "decompose",
                    {"query_key": qkey, "request_keys": [request_key(r) for r in requests]},
                )
                self.store.record_link(
                    "aggregate",
                    {"query_key": qkey, "fulfilment_keys": fulfilment_keys},
                )

        reused = {
            k: v - reused_before.get(k, 0)
            for k, v in self.store.stats.reuse.items()
            if v - reused_before.get(k, 0)
        }
        return ProcessReport(
            answer=answer,
            executed=executed,
            reused=reused,
            fulfilments=fulfilments,
            wall_time=time.perf_counter() - t0,
            first_seq=first_seq,
            last_seq=self.events.last_seq,
        )

    def answer_request(self, request: Request) -> tuple[Response, int]:
        """Decomposition-layer entry point; returns (response, experiments run)."""
        _, _, response, executed = self._fulfil(request, None)
        return response, executed
