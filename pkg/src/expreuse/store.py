"""Experiment store: answered queries, fulfilled requests, performed experiments.

Four relations, mirroring the layered pipeline:

* ``answers``   -- query key  -> (query, answer)
* ``responses`` -- request key -> (request, response)
* ``results``   -- spec key   -> (spec, result payload in a trace backend)
* ``links``     -- records tying the relations together, tagged with the
                   pipeline operation that produced them (decompose,
                   complete, compute, aggregate)

Two physical stores sit behind this one logical interface: trace payloads
live in a swappable trace backend (in-memory, file-backed, or dropping),
everything else in the metadata maps. A single lock serializes writers;
readers rely on the GIL-atomicity of dict access.

Inserts are idempotent on identical (key, value) pairs and refuse to
overwrite a key with a different value. TTL purging cascades over links:
a removed entry takes every link referencing it along, while answer or
response entries derived from purged evidence stay (they were valid when
created; the consistency checker treats them as trusted).
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from .errors import DuplicateKeyWithDifferentValue, MalformedConnection
from .languages import (
    Answer,
    ExperimentResult,
    ExperimentSpec,
    Fulfilment,
    Query,
    Request,
    Response,
    answers_equal,
    canon_answer,
    query_key,
    request_key,
    response_canon,
    responses_equal,
    spec_key,
)
from .values import canon_binding, canon_dumps

LAYER_USER = "user"
LAYER_DECOMPOSITION = "decomposition"
LAYER_EXECUTION = "execution"

MECH_DIRECT = "direct"
MECH_SYMBOLIC = "symbolic"
MECH_FUZZY_RETRIEVAL = "fuzzy-retrieval"
MECH_FUZZY_RECOMPUTATION = "fuzzy-recomputation"
MECH_EXECUTED = "executed"

LINK_TAGS = ("decompose", "complete", "compute", "aggregate")


# --- trace backends ----------------------------------------------------------

class MemoryTraceStore:
    """Keeps result payloads in process memory."""

    def __init__(self) -> None:
        self._blocks: dict[int, ExperimentResult] = {}

    def put(self, block_id: int, result: ExperimentResult) -> int:
        self._blocks[block_id] = result
        return result.nbytes

    def get(self, block_id: int) -> ExperimentResult | None:
        return self._blocks.get(block_id)

    def remove(self, block_id: int) -> None:
        self._blocks.pop(block_id, None)

    def close(self) -> None:
        pass


class NullTraceStore:
    """Drops payloads; retains nothing. Used by metrics-only storage modes."""

    def put(self, block_id: int, result: ExperimentResult) -> int:
        return 0

    def get(self, block_id: int) -> ExperimentResult | None:
        return None

    def remove(self, block_id: int) -> None:
        pass

    def close(self) -> None:
        pass


# --- entries ------------------------------------------------------------------

@dataclass
class StoredAnswer:
    key: str
    query: Query
    answer: Answer
    ts: float
    mechanism: str  # executed | symbolic | fuzzy-recomputation | imported
    source_key: str | None
    nbytes: int


@dataclass
class StoredResponse:
    key: str
    request: Request
    response: Response
    ts: float
    mechanism: str
    source_key: str | None
    nbytes: int


@dataclass
class StoredResult:
    key: str
    spec: ExperimentSpec
    block_id: int
    signals: tuple[str, ...]
    dt: float
    ts: float
    nbytes: int  # trace payload bytes at insert time (0 when dropped)
    meta_nbytes: int


@dataclass
class LinkRecord:
    seq: int
    tag: str
    ts: float
    payload: dict
    nbytes: int


@dataclass
class StoreStats:
    answers: int = 0
    responses: int = 0
    results: int = 0
    links: int = 0
    executed_total: int = 0
    trace_bytes: int = 0
    meta_bytes: int = 0
    purged_total: int = 0
    reuse: dict[str, int] = field(default_factory=dict)

    def count_reuse(self, layer: str, mechanism: str) -> None:
        k = f"{layer}/{mechanism}"
        self.reuse[k] = self.reuse.get(k, 0) + 1

    def to_dict(self) -> dict:
        return {
            "answers": self.answers,
            "responses": self.responses,
            "results": self.results,
            "links": self.links,
            "executed_total": self.executed_total,
            "trace_bytes": self.trace_bytes,
            "meta_bytes": self.meta_bytes,
            "purged_total": self.purged_total,
            "reuse": dict(sorted(self.reuse.items())),
        }


_INF_TTL = math.inf


@dataclass
class TtlConfig:
    answers: float = _INF_TTL
    responses: float = _INF_TTL
    results: float = _INF_TTL
    links: float = _INF_TTL


class ExperimentStore:
    """Logical store over the four relations plus a trace backend."""

    def __init__(
        self,
        *,
        trace_backend=None,
        ttl: TtlConfig | None = None,
        clock: Callable[[], float] = time.time,
        journal=None,
    ) -> None:
        self._lock = threading.RLock()
        self._answers: dict[str, StoredAnswer] = {}
        self._responses: dict[str, StoredResponse] = {}
        self._results: dict[str, StoredResult] = {}
        self._links: list[LinkRecord] = []
        self._agg_by_query: dict[str, LinkRecord] = {}
        self._compute_by_request: dict[str, LinkRecord] = {}
        self._traces = trace_backend if trace_backend is not None else MemoryTraceStore()
        self._ttl = ttl or TtlConfig()
        self._clock = clock
        self._journal = journal
        self._next_block = 1
        self._next_link = 1
        self._listeners: list[Callable] = []
        self.stats = StoreStats()
        self.version = 0

    # -- listeners (engine indexes subscribe here)

    def add_listener(self, fn: Callable) -> None:
        self._listeners.append(fn)

    def _emit(self, event: str, relation: str, item) -> None:
        for fn in self._listeners:
            fn(event, relation, item)

    # -- reads

    def get_answer(self, q: Query) -> Answer | None:
        e = self._answers.get(query_key(q))
        return e.answer if e is not None else None

    def get_answer_entry(self, key: str) -> StoredAnswer | None:
        return self._answers.get(key)

    def get_response(self, r: Request) -> Response | None:
        e = self._responses.get(request_key(r))
        return e.response if e is not None else None

    def get_response_entry(self, key: str) -> StoredResponse | None:
        return self._responses.get(key)

    def get_result(self, e: ExperimentSpec) -> ExperimentResult | None:
        entry = self._results.get(spec_key(e))
        if entry is None:
            return None
        return self._traces.get(entry.block_id)

    def get_result_entry(self, key: str) -> StoredResult | None:
        return self._results.get(key)

    def result_payload(self, entry: StoredResult) -> ExperimentResult | None:
        return self._traces.get(entry.block_id)

    def get_responses(self, q: Query) -> list[Fulfilment] | None:
        """Fulfilments recorded by this query's aggregate link, if intact."""
        link = self._agg_by_query.get(query_key(q))
        if link is None:
            return None
        out: list[Fulfilment] = []
        for rk in link.payload["fulfilment_keys"]:
            e = self._responses.get(rk)
            if e is None:
                return None  # evidence partially purged
            out.append((e.request, e.response))
        return out

    def get_results_for(self, r: Request) -> list[ExperimentResult] | None:
        """Results recorded by this request's compute link, if payloads are live."""
        link = self._compute_by_request.get(request_key(r))
        if link is None:
            return None
        out: list[ExperimentResult] = []
        for sk in link.payload["spec_keys"]:
            entry = self._results.get(sk)
            if entry is None:
                return None
            payload = self._traces.get(entry.block_id)
            if payload is None:
                return None
            out.append(payload)
        return out

    def answers_entries(self) -> list[StoredAnswer]:
        return list(self._answers.values())

    def responses_entries(self) -> list[StoredResponse]:
        return list(self._responses.values())

    def results_entries(self) -> list[StoredResult]:
        return list(self._results.values())

    def links_entries(self) -> list[LinkRecord]:
        return list(self._links)

    # -- writes

    def add_answer(
        self,
        q: Query,
        answer: Answer,
        *,
        mechanism: str = MECH_EXECUTED,
        source_key: str | None = None,
        _replay_ts: float | None = None,
    ) -> str:
        key = query_key(q)
        with self._lock:
            existing = self._answers.get(key)
            if existing is not None:
                if answers_equal(existing.answer, answer):
                    return key
                raise DuplicateKeyWithDifferentValue(f"answer for {key}")
            blob = canon_dumps({"k": key, "a": canon_answer(answer)})
            entry = StoredAnswer(
                key=key,
                query=q,
                answer=answer,
                ts=self._clock() if _replay_ts is None else _replay_ts,
                mechanism=mechanism,
                source_key=source_key,
                nbytes=len(blob),
            )
            self._answers[key] = entry
            self.stats.answers += 1
            self.stats.meta_bytes += entry.nbytes
            self.version += 1
            self._journal_op(
                "q",
                ts=entry.ts,
                query={"l": q.language_id, "b": canon_binding(q.binding)},
                answer=canon_answer(answer),
                mech=mechanism,
                src=source_key,
            )
            self._emit("add", "answers", entry)
            return key

    def add_response(
        self,
        r: Request,
        rsp: Response,
        *,
        mechanism: str = MECH_EXECUTED,
        source_key: str | None = None,
        _replay_ts: float | None = None,
    ) -> str:
        key = request_key(r)
        with self._lock:
            existing = self._responses.get(key)
            if existing is not None:
                if responses_equal(existing.response, rsp):
                    return key
                raise DuplicateKeyWithDifferentValue(f"response for {key}")
            blob = canon_dumps({"k": key, "r": response_canon(rsp)})
            entry = StoredResponse(
                key=key,
                request=r,
                response=rsp,
                ts=self._clock() if _replay_ts is None else _replay_ts,
                mechanism=mechanism,
                source_key=source_key,
                nbytes=len(blob),
            )
            self._responses[key] = entry
            self.stats.responses += 1
            self.stats.meta_bytes += entry.nbytes
            self.version += 1
            self._journal_op(
                "r",
                ts=entry.ts,
                request={
                    "l": r.language_id,
                    "b": canon_binding(r.binding),
                    "poi": sorted(r.poi),
                },
                response=response_canon(rsp),
                mech=mechanism,
                src=source_key,
            )
            self._emit("add", "responses", entry)
            return key

    def add_result(
        self,
        e: ExperimentSpec,
        result: ExperimentResult,
        *,
        _replay_ts: float | None = None,
    ) -> str:
        key = spec_key(e)
        with self._lock:
            existing = self._results.get(key)
            if existing is not None:
                prior = self._traces.get(existing.block_id)
                if prior is not None and prior != result:
                    raise DuplicateKeyWithDifferentValue(f"result for {key}")
                return key
            block_id = self._next_block
            self._next_block += 1
            stored_bytes = self._traces.put(block_id, result)
            meta_blob = canon_dumps(
                {"k": key, "sig": sorted(result.traces), "dt": result.dt}
            )
            entry = StoredResult(
                key=key,
                spec=e,
                block_id=block_id,
                signals=tuple(sorted(result.traces)),
                dt=result.dt,
                ts=self._clock() if _replay_ts is None else _replay_ts,
                nbytes=stored_bytes,
                meta_nbytes=len(meta_blob),
            )
            self._results[key] = entry
            self.stats.results += 1
            self.stats.executed_total += 1
            self.stats.trace_bytes += stored_bytes
            self.stats.meta_bytes += entry.meta_nbytes
            self.version += 1
            self._journal_result(e, entry, result)
            self._emit("add", "results", entry)
            return key

    def record_link(self, tag: str, payload: dict, *, _replay_ts: float | None = None) -> LinkRecord:
        with self._lock:
            self._validate_link(tag, payload)
            link = LinkRecord(
                seq=self._next_link,
                tag=tag,
                ts=self._clock() if _replay_ts is None else _replay_ts,
                payload=payload,
                nbytes=len(canon_dumps(payload)) + 16,
            )
            self._next_link += 1
            self._links.append(link)
            if tag == "aggregate":
                self._agg_by_query[payload["query_key"]] = link
            elif tag == "compute":
                self._compute_by_request[payload["request_key"]] = link
            self.stats.links += 1
            self.stats.meta_bytes += link.nbytes
            self.version += 1
            self._journal_op("link", ts=link.ts, tag=tag, payload=payload)
            return link

    def _validate_link(self, tag: str, payload: dict) -> None:
        if tag not in LINK_TAGS:
            raise MalformedConnection(f"unknown link tag {tag!r}")
        try:
            if tag == "decompose":
                qk, rks = payload["query_key"], payload["request_keys"]
                if qk not in self._answers:
                    raise MalformedConnection(f"decompose link: query {qk} not stored")
                if not isinstance(rks, list) or not rks:
                    raise MalformedConnection("decompose link: empty request set")
            elif tag == "complete":
                rk, plan = payload["request_key"], payload["plan"]
                if rk not in self._responses:
                    raise MalformedConnection(f"complete link: request {rk} not stored")
                for kind, sk, stored in plan:
                    if stored and sk not in self._results:
                        raise MalformedConnection(f"complete link: result {sk} not stored")
            elif tag == "compute":
                rk, sks = payload["request_key"], payload["spec_keys"]
                if rk not in self._responses:
                    raise MalformedConnection(f"compute link: request {rk} not stored")
                for sk in sks:
                    if sk not in self._results:
                        raise MalformedConnection(f"compute link: result {sk} unknown")
            elif tag == "aggregate":
                qk, fks = payload["query_key"], payload["fulfilment_keys"]
                if qk not in self._answers:
                    raise MalformedConnection(f"aggregate link: query {qk} not stored")
                for fk in fks:
                    if fk not in self._responses:
                        raise MalformedConnection(f"aggregate link: response {fk} unknown")
        except KeyError as exc:
            raise MalformedConnection(f"{tag} link payload missing {exc}") from None

    # -- journal plumbing (see persist.py)

    def _journal_op(self, op: str, **data) -> None:
        if self._journal is not None:
            self._journal.append({"op": op, **data})

    def _journal_result(self, spec: ExperimentSpec, entry: StoredResult, result: ExperimentResult) -> None:
        if self._journal is None:
            return
        self._journal.append_result(spec, entry, result)

    # -- purge

    def purge_ttl(self, now: float | None = None) -> int:
        """Drop entries older than their relation's TTL; cascade over links.

        Returns the number of removed items (entries plus link records).
        An answer or response derived from purged evidence is kept: it was
        sound when stored, only its explaining links disappear.
        """
        now = self._clock() if now is None else now
        removed = 0
        with self._lock:
            for name, table, ttl in (
                ("answers", self._answers, self._ttl.answers),
                ("responses", self._responses, self._ttl.responses),
                ("results", self._results, self._ttl.results),
            ):
                if not math.isfinite(ttl):
                    continue
                cutoff = now - ttl
                stale_keys = [k for k, e in table.items() if e.ts < cutoff]
                if not stale_keys:
                    continue
                self._journal_op("rm", ts=now, rel=name, keys=stale_keys)
                for key in stale_keys:
                    removed += 1 + self._remove_entry(name, key)
            if math.isfinite(self._ttl.links):
                cutoff = now - self._ttl.links
                stale = [l for l in self._links if l.ts < cutoff]
                if stale:
                    self._journal_op("rmlink", ts=now, seqs=[l.seq for l in stale])
                for link in stale:
                    self._drop_link(link)
                removed += len(stale)
            if removed:
                self.version += 1
                self.stats.purged_total += removed
        return removed

    def _remove_entry(self, relation: str, key: str) -> int:
        """Remove one entry plus every link referencing it; returns links dropped."""
        table = {"answers": self._answers, "responses": self._responses, "results": self._results}[relation]
        entry = table.pop(key, None)
        if entry is None:
            return 0
        if relation == "answers":
            self.stats.answers -= 1
            self.stats.meta_bytes -= entry.nbytes
        elif relation == "responses":
            self.stats.responses -= 1
            self.stats.meta_bytes -= entry.nbytes
        else:
            self.stats.results -= 1
            self.stats.trace_bytes -= entry.nbytes
            self.stats.meta_bytes -= entry.meta_nbytes
            self._traces.remove(entry.block_id)
        self._emit("remove", relation, key)
        dangling = [l for l in self._links if self._link_references(l, relation, key)]
        for link in dangling:
            self._drop_link(link)
        return len(dangling)

    @staticmethod
    def _link_references(link: LinkRecord, relation: str, key: str) -> bool:
        p = link.payload
        if relation == "answers":
            return p.get("query_key") == key
        if relation == "responses":
            return (
                p.get("request_key") == key
                or key in p.get("fulfilment_keys", ())
            )
        return key in p.get("spec_keys", ()) or any(
            sk == key for _, sk, _ in p.get("plan", ())
        )

    def _drop_link(self, link: LinkRecord) -> None:
        try:
            self._links.remove(link)
        except ValueError:
            return
        if link.tag == "aggregate":
            cur = self._agg_by_query.get(link.payload["query_key"])
            if cur is link:
                del self._agg_by_query[link.payload["query_key"]]
        elif link.tag == "compute":
            cur = self._compute_by_request.get(link.payload["request_key"])
            if cur is link:
                del self._compute_by_request[link.payload["request_key"]]
        self.stats.links -= 1
        self.stats.meta_bytes -= link.nbytes

    def close(self) -> None:
        self._traces.close()
        if self._journal is not None:
            self._journal.close()


# --- consistency -------------------------------------------------------------

@dataclass
class ConsistencyIssue:
    condition: str  # answers | responses | results | links
    key: str
    message: str


@dataclass
class ConsistencyReport:
    checked: dict[str, int]
    issues: list[ConsistencyIssue]

    @property
    def ok(self) -> bool:
        return not self.issues

    def summary(self) -> str:
        parts = [f"{k}={v}" for k, v in sorted(self.checked.items())]
        state = "consistent" if self.ok else f"{len(self.issues)} issue(s)"
        return f"store check: {', '.join(parts)}; {state}"


def _structure_for_request_language(registry, request_language_id: str):
    for s in registry.structures():
        if s.request_language_id == request_language_id:
            return s
    return None


def consistency_check(store: ExperimentStore, registry, schemes=None) -> ConsistencyReport:
    """Replay the pure relations behind every stored entry and link.

    * every answer either replays through its aggregate link or its
      justification, or is marked trusted (evidence purged, payload dropped)
    * every response replays through its compute link or justification
    * every result's spec validates and its payload, when live, is well formed
    * every link's references resolve and the recorded operation, replayed on
      the live entries, reproduces the stored outcome

    ``schemes`` maps ``(layer, language_id)`` to a reasoning scheme so
    symbolic entries can be re-justified; without it they are trusted.
    """
    from .languages import validate_query, validate_request, validate_response, validate_spec

    schemes = schemes or {}
    issues: list[ConsistencyIssue] = []
    answers = store.answers_entries()
    responses = store.responses_entries()
    results = store.results_entries()
    links = store.links_entries()

    def bad(condition: str, key: str, message: str) -> None:
        issues.append(ConsistencyIssue(condition, key, message))

    agg_by_query = {l.payload["query_key"]: l for l in links if l.tag == "aggregate"}
    compute_by_request = {l.payload["request_key"]: l for l in links if l.tag == "compute"}

    for entry in answers:
        try:
            qlang = registry.query_language(entry.query.language_id)
            validate_query(registry, entry.query)
            if not qlang.answers.contains(entry.answer):
                bad("answers", entry.key, "answer outside the language's answer domain")
                continue
        except Exception as exc:
            bad("answers", entry.key, f"query no longer validates: {exc}")
            continue
        if entry.mechanism == MECH_SYMBOLIC and entry.source_key:
            source = store.get_answer_entry(entry.source_key)
            scheme = schemes.get((LAYER_USER, entry.query.language_id))
            if source is not None and scheme is not None and scheme.justify is not None:
                evidence = (
                    store.get_responses(source.query)
                    if scheme.justify_evidence == "fulfilments"
                    else None
                )
                if scheme.justify_evidence == "fulfilments" and evidence is None:
                    pass  # evidence purged; the entry stays trusted
                else:
                    derived = scheme.justify(source.query, source.answer, entry.query, evidence)
                    if derived is None:
                        bad("answers", entry.key, "stored justification no longer fires")
                    elif not answers_equal(derived, entry.answer):
                        bad("answers", entry.key, "justification replays to a different answer")
        elif entry.mechanism == MECH_EXECUTED:
            link = agg_by_query.get(entry.key)
            if link is not None:
                fulfs = store.get_responses(entry.query)
                if fulfs is not None:
                    structure = registry.structure_for(entry.query.language_id)
                    try:
                        replayed = structure.aggregate(entry.query, fulfs)
                    except Exception as exc:
                        bad("answers", entry.key, f"aggregate replay raised: {exc}")
                        continue
                    if not answers_equal(replayed, entry.answer):
                        bad("answers", entry.key, "aggregate replay disagrees with stored answer")

    for entry in responses:
        structure = _structure_for_request_language(registry, entry.request.language_id)
        try:
            validate_request(registry, entry.request)
            validate_response(registry, entry.request, entry.response)
        except Exception as exc:
            bad("responses", entry.key, f"request/response no longer validates: {exc}")
            continue
        if entry.mechanism == MECH_SYMBOLIC and entry.source_key:
            source = store.get_response_entry(entry.source_key)
            scheme = schemes.get((LAYER_DECOMPOSITION, entry.request.language_id))
            if source is not None and scheme is not None and scheme.justify is not None:
                evidence = (
                    store.get_results_for(source.request)
                    if scheme.justify_evidence == "results"
                    else None
                )
                derived = scheme.justify(source.request, source.response, entry.request, evidence)
                if derived is None:
                    bad("responses", entry.key, "stored justification no longer fires")
                elif not responses_equal(derived, entry.response):
                    bad("responses", entry.key, "justification replays to a different response")
        elif entry.mechanism == MECH_EXECUTED and structure is not None:
            link = compute_by_request.get(entry.key)
            if link is not None:
                found = store.get_results_for(entry.request)
                if found is not None:
                    try:
                        replayed = structure.compute(entry.request, found)
                    except Exception as exc:
                        bad("responses", entry.key, f"compute replay raised: {exc}")
                        continue
                    if not responses_equal(replayed, entry.response):
                        bad("responses", entry.key, "compute replay disagrees with stored response")

    for entry in results:
        try:
            slang = registry.spec_language(entry.spec.language_id)
            validate_spec(registry, entry.spec)
        except Exception as exc:
            bad("results", entry.key, f"spec no longer validates: {exc}")
            continue
        expected = {name for name, _ in slang.result_schema}
        if expected and not expected <= set(entry.signals):
            bad("results", entry.key, "result lacks signals the spec language declares")
        payload = store.result_payload(entry)
        if payload is not None:
            for name, series in payload.traces.items():
                if len(series.times) != len(series.values):
                    bad("results", entry.key, f"signal {name}: ragged series")
                elif any(b <= a for a, b in zip(series.times, series.times[1:])):
                    bad("results", entry.key, f"signal {name}: time axis not increasing")

    for link in links:
        p = link.payload
        lk = f"{link.tag}#{link.seq}"
        if link.tag == "decompose":
            anchor = store.get_answer_entry(p.get("query_key", ""))
            if anchor is None:
                bad("links", lk, "decompose link references a missing query")
                continue
            structure = registry.structure_for(anchor.query.language_id)
            replayed = {request_key(r) for r in structure.decompose(anchor.query)}
            if replayed != set(p["request_keys"]):
                bad("links", lk, "decompose replay yields a different request set")
        elif link.tag == "complete":
            anchor = store.get_response_entry(p.get("request_key", ""))
            if anchor is None:
                bad("links", lk, "complete link references a missing request")
                continue
            structure = _structure_for_request_language(registry, anchor.request.language_id)
            if structure is None:
                continue
            replayed = [(s.kind, spec_key(s)) for s in structure.complete(anchor.request)]
            if replayed != [(kind, sk) for kind, sk, _ in p["plan"]]:
                bad("links", lk, "complete replay yields a different plan")
        elif link.tag == "compute":
            anchor = store.get_response_entry(p.get("request_key", ""))
            if anchor is None:
                bad("links", lk, "compute link references a missing request")
                continue
            for sk in p["spec_keys"]:
                if store.get_result_entry(sk) is None:
                    bad("links", lk, f"compute link references missing result {sk}")
        elif link.tag == "aggregate":
            anchor = store.get_answer_entry(p.get("query_key", ""))
            if anchor is None:
                bad("links", lk, "aggregate link references a missing query")
                continue
            for fk in p["fulfilment_keys"]:
                if store.get_response_entry(fk) is None:
                    bad("links", lk, f"aggregate link references missing response {fk}")

    return ConsistencyReport(
        checked={
            "answers": len(answers),
            "responses": len(responses),
            "results": len(results),
            "links": len(links),
        },
        issues=issues,
    )
