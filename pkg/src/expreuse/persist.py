"""On-disk formats: the metadata journal and the binary trace file.

A persistent store is a directory holding two files:

``meta.log``
    Append-only journal of length-prefixed JSON records, one per line:
    ``<decimal byte length> <json>\n``. The length covers the JSON bytes
    only. Every record carries ``{"v": 1, "op": ...}``; the ops are

    * ``q``      stored answer   (canonical query, answer, mechanism, source)
    * ``r``      stored response (canonical request, response, mechanism, source)
    * ``e``      stored result   (canonical spec, trace block id, dt, signals)
    * ``link``   link record     (tag plus its payload)
    * ``rm``     entry removal   (relation, keys) emitted by TTL purges
    * ``rmlink`` link removal    (record sequence numbers)

    A partial final record (crash tail) is dropped on open; any other
    framing damage raises CorruptLog.

``traces.bin``
    Append-only sequence of binary records, each:

    =========  ========================================
    magic      4 bytes, ``TRC1``
    rec type   u8, 1 = block, 2 = tombstone
    block id   u32 little endian
    length     u64 little endian, payload byte count
    payload    block: f64 dt, f64 wall, u16 signal count,
               then per signal u16 name length, utf-8 name,
               u32 sample count, f64[n] times, f64[n] values.
               tombstone: empty.
    =========  ========================================

    A tombstone supersedes the block with the same id. ``compact`` rewrites
    live blocks into a fresh file and swaps it in place.
"""

from __future__ import annotations

import json
import os
import struct
from typing import Iterable

import numpy as np

from .errors import CorruptLog
from .languages import (
    ExperimentResult,
    ExperimentSpec,
    TraceSeries,
    decode_answer,
    decode_query,
    decode_request,
    decode_response,
    decode_spec,
)
from .store import ExperimentStore, StoredResult, TtlConfig
from .values import canon_binding

_MAGIC = b"TRC1"
_REC_BLOCK = 1
_REC_TOMB = 2
_HEADER = struct.Struct("<4sBIQ")

JOURNAL_VERSION = 1


class MetaJournal:
    """Length-prefixed JSON journal. One writer; readers replay from zero."""

    def __init__(self, path: str) -> None:
        self.path = path
        self._fh = open(path, "ab")

    def append(self, record: dict) -> None:
        record = {"v": JOURNAL_VERSION, **record}
        data = json.dumps(record, sort_keys=True, allow_nan=False).encode()
        self._fh.write(b"%d %s\n" % (len(data), data))
        self._fh.flush()

    def append_result(self, spec: ExperimentSpec, entry: StoredResult, result: ExperimentResult) -> None:
        self.append(
            {
                "op": "e",
                "ts": entry.ts,
                "spec": {
                    "l": spec.language_id,
                    "k": spec.kind,
                    "p": canon_binding(spec.params),
                    "oq_r": spec.origin_request,
                    "oq_q": spec.origin_query,
                    "frame": spec.frame,
                },
                "block": entry.block_id,
                "dt": entry.dt,
                "signals": list(entry.signals),
                "nbytes": entry.nbytes,
            }
        )

    def close(self) -> None:
        self._fh.close()


def read_journal(path: str) -> list[dict]:
    """Replay the journal; drops a truncated tail, rejects other damage."""
    records: list[dict] = []
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0
    n = len(data)
    while pos < n:
        sp = data.find(b" ", pos)
        if sp < 0:
            if data[pos:].strip() == b"":
                break
            raise CorruptLog(f"{path}: unterminated length prefix at byte {pos}")
        try:
            length = int(data[pos:sp])
        except ValueError:
            raise CorruptLog(f"{path}: bad length prefix at byte {pos}") from None
        start = sp + 1
        end = start + length
        if end + 1 > n:
            break  # crash tail: final record incomplete, drop it
        body = data[start:end]
        if data[end : end + 1] != b"\n":
            raise CorruptLog(f"{path}: record at byte {pos} not newline-terminated")
        try:
            rec = json.loads(body)
        except ValueError:
            raise CorruptLog(f"{path}: record at byte {pos} is not valid JSON") from None
        if rec.get("v") != JOURNAL_VERSION:
            raise CorruptLog(f"{path}: unsupported journal version {rec.get('v')!r}")
        records.append(rec)
        pos = end + 1
    return records


class FileTraceStore:
    """Trace payloads in a single append-only file with tombstone deletes."""

    def __init__(self, path: str) -> None:
        self.path = path
        self._offsets: dict[int, int] = {}
        if os.path.exists(path):
            self._scan()
        self._fh = open(path, "ab")

    def _scan(self) -> None:
        with open(self.path, "rb") as fh:
            while True:
                pos = fh.tell()
                header = fh.read(_HEADER.size)
                if not header:
                    break
                if len(header) < _HEADER.size:
                    break  # crash tail
                magic, rec_type, block_id, length = _HEADER.unpack(header)
                if magic != _MAGIC:
                    raise CorruptLog(f"{self.path}: bad magic at byte {pos}")
                body = fh.read(length)
                if len(body) < length:
                    break  # crash tail
                if rec_type == _REC_BLOCK:
                    self._offsets[block_id] = pos
                elif rec_type == _REC_TOMB:
                    self._offsets.pop(block_id, None)
                else:
                    raise CorruptLog(f"{self.path}: unknown record type {rec_type}")

    def put(self, block_id: int, result: ExperimentResult) -> int:
        payload = _encode_block(result)
        pos = self._fh.tell()
        self._fh.write(_HEADER.pack(_MAGIC, _REC_BLOCK, block_id, len(payload)))
        self._fh.write(payload)
        self._fh.flush()
        self._offsets[block_id] = pos
        return result.nbytes

    def get(self, block_id: int) -> ExperimentResult | None:
        pos = self._offsets.get(block_id)
        if pos is None:
            return None
        self._fh.flush()
        with open(self.path, "rb") as fh:
            fh.seek(pos)
            header = fh.read(_HEADER.size)
            magic, rec_type, rid, length = _HEADER.unpack(header)
            if magic != _MAGIC or rec_type != _REC_BLOCK or rid != block_id:
                raise CorruptLog(f"{self.path}: index points at a non-block record")
            return _decode_block(fh.read(length))

    def remove(self, block_id: int) -> None:
        if block_id not in self._offsets:
            return
        self._fh.write(_HEADER.pack(_MAGIC, _REC_TOMB, block_id, 0))
        self._fh.flush()
        del self._offsets[block_id]

    def compact(self) -> None:
        """Rewrite live blocks into a fresh file, dropping dead space."""
        tmp = self.path + ".compact"
        live = sorted(self._offsets)
        with open(tmp, "wb") as out:
            new_offsets: dict[int, int] = {}
            for block_id in live:
                result = self.get(block_id)
                if result is None:
                    continue
                payload = _encode_block(result)
                new_offsets[block_id] = out.tell()
                out.write(_HEADER.pack(_MAGIC, _REC_BLOCK, block_id, len(payload)))
                out.write(payload)
        self._fh.close()
        os.replace(tmp, self.path)
        self._offsets = new_offsets
        self._fh = open(self.path, "ab")

    def block_ids(self) -> list[int]:
        return sorted(self._offsets)

    def close(self) -> None:
        self._fh.close()


def _encode_block(result: ExperimentResult) -> bytes:
    parts = [struct.pack("<ddH", result.dt, result.wall_time, len(result.traces))]
    for name in sorted(result.traces):
        series = result.traces[name]
        nm = name.encode()
        times = np.ascontiguousarray(series.times, dtype="<f8")
        values = np.ascontiguousarray(series.values, dtype="<f8")
        if times.shape != values.shape:
            raise CorruptLog(f"signal {name}: ragged series cannot be encoded")
        parts.append(struct.pack("<H", len(nm)))
        parts.append(nm)
        parts.append(struct.pack("<I", times.size))
        parts.append(times.tobytes())
        parts.append(values.tobytes())
    return b"".join(parts)


def _decode_block(payload: bytes) -> ExperimentResult:
    dt, wall, count = struct.unpack_from("<ddH", payload, 0)
    pos = struct.calcsize("<ddH")
    traces: dict[str, TraceSeries] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", payload, pos)
        pos += 2
        name = payload[pos : pos + name_len].decode()
        pos += name_len
        (n,) = struct.unpack_from("<I", payload, pos)
        pos += 4
        times = np.frombuffer(payload, dtype="<f8", count=n, offset=pos).copy()
        pos += 8 * n
        values = np.frombuffer(payload, dtype="<f8", count=n, offset=pos).copy()
        pos += 8 * n
        traces[name] = TraceSeries(times=times, values=values)
    return ExperimentResult(traces=traces, dt=dt, wall_time=wall)


# --- opening a persistent store ------------------------------------------------

def open_store(directory: str, *, ttl: TtlConfig | None = None, clock=None) -> ExperimentStore:
    """Open (or create) a file-backed store rooted at ``directory``.

    Metadata is replayed from the journal; trace payloads stay on disk and
    are fetched lazily through the file trace store.
    """
    import time as _time

    os.makedirs(directory, exist_ok=True)
    meta_path = os.path.join(directory, "meta.log")
    trace_path = os.path.join(directory, "traces.bin")
    records = read_journal(meta_path) if os.path.exists(meta_path) else []
    traces = FileTraceStore(trace_path)
    store = ExperimentStore(
        trace_backend=traces,
        ttl=ttl,
        clock=clock or _time.time,
        journal=None,  # attached after replay so replay does not re-journal
    )
    _replay(store, records)
    store._journal = MetaJournal(meta_path)
    return store


def _replay(store: ExperimentStore, records: Iterable[dict]) -> None:
    removed_links = 0
    for rec in records:
        op = rec["op"]
        if op == "q":
            store.add_answer(
                decode_query(rec["query"]),
                decode_answer(rec["answer"]),
                mechanism=rec["mech"],
                source_key=rec.get("src"),
                _replay_ts=rec["ts"],
            )
        elif op == "r":
            store.add_response(
                decode_request(rec["request"]),
                decode_response(rec["response"]),
                mechanism=rec["mech"],
                source_key=rec.get("src"),
                _replay_ts=rec["ts"],
            )
        elif op == "e":
            _replay_result(store, rec)
        elif op == "link":
            payload = rec["payload"]
            if rec["tag"] == "complete":
                payload = {**payload, "plan": [tuple(x) for x in payload["plan"]]}
            store.record_link(rec["tag"], payload, _replay_ts=rec["ts"])
        elif op == "rm":
            for key in rec["keys"]:
                removed_links += store._remove_entry(rec["rel"], key)
        elif op == "rmlink":
            seqs = set(rec["seqs"])
            for link in [l for l in store._links if l.seq in seqs]:
                store._drop_link(link)
    store.stats.purged_total = 0  # replay restores state, not purge history


def _replay_result(store: ExperimentStore, rec: dict) -> None:
    """Re-link a journalled result to its existing trace block."""
    spec = decode_spec(rec["spec"])
    from .languages import spec_key as _spec_key

    key = _spec_key(spec)
    if key in store._results:
        return
    entry = StoredResult(
        key=key,
        spec=spec,
        block_id=rec["block"],
        signals=tuple(rec["signals"]),
        dt=rec["dt"],
        ts=rec["ts"],
        nbytes=rec["nbytes"],
        meta_nbytes=64,
    )
    store._results[key] = entry
    store._next_block = max(store._next_block, rec["block"] + 1)
    store.stats.results += 1
    store.stats.executed_total += 1
    store.stats.trace_bytes += rec["nbytes"]
    store.stats.meta_bytes += entry.meta_nbytes
    store.version += 1
    store._emit("add", "results", entry)
