"""k-wise comparison oracles.

Every oracle exposes ``k``, ``query(items) -> frozenset of (winner, loser)``,
``new_round()`` and ``close()``.  Synthetic oracles answer with the complete
induced subtournament; the external oracle forwards queries to a child
process over line-delimited JSON.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    InvalidInput,
    OracleTimeout,
    ProtocolError,
    QueryTooLarge,
    QueryTooSmall,
    ReplayMiss,
)
from .graph import Edge, Tournament

log = logging.getLogger(__name__)

Response = frozenset  # frozenset[Edge]


def order_to_edges(order: Sequence[int]) -> frozenset[Edge]:
    """All pairs implied by a best-first ranking."""
    return frozenset((order[i], order[j]) for i in range(len(order)) for j in range(i + 1, len(order)))


class Oracle:
    """Base class: validates the query, then delegates to ``_respond``."""

    k: int
    n: Optional[int] = None

    def query(self, items: Iterable[int]) -> frozenset[Edge]:
        items = tuple(items)
        if len(set(items)) != len(items):
            raise InvalidInput(f"duplicate items in query {items}")
        if len(items) < 2:
            raise QueryTooSmall(f"query needs at least 2 items, got {len(items)}")
        if len(items) > self.k:
            raise QueryTooLarge(f"query of {len(items)} items exceeds k={self.k}")
        if self.n is not None and any(not 0 <= v < self.n for v in items):
            raise InvalidInput(f"query {items} references vertices outside [0, {self.n})")
        return self._respond(items)

    def _respond(self, items: tuple[int, ...]) -> frozenset[Edge]:
        raise NotImplementedError

    def new_round(self) -> None:
        pass

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _check_k(k: int) -> int:
    if k < 2:
        raise InvalidInput(f"k must be >= 2, got {k}")
    return k


class PermutationOracle(Oracle):
    """Transitive ground truth: earlier entries of ``perm`` win."""

    def __init__(self, perm: Sequence[int], k: int):
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise InvalidInput("perm is not a permutation of range(n)")
        self.perm = tuple(perm)
        self.n = n
        self.k = _check_k(k)
        self._pos = [0] * n
        for i, v in enumerate(perm):
            self._pos[v] = i

    def _respond(self, items):
        return order_to_edges(sorted(items, key=self._pos.__getitem__))

    def tournament(self) -> Tournament:
        return Tournament.from_permutation(self.perm)


class MatrixOracle(Oracle):
    """Arbitrary (possibly cyclic) ground-truth tournament."""

    def __init__(self, t: Tournament, k: int):
        self.t = t
        self.n = t.n
        self.k = _check_k(k)

    def _respond(self, items):
        return self.t.induced(items)

    def tournament(self) -> Tournament:
        return self.t


def make_permutation_oracle(perm: Sequence[int], k: int) -> PermutationOracle:
    return PermutationOracle(perm, k)


def make_matrix_oracle(t, k: int) -> MatrixOracle:
    """``t`` is a :class:`Tournament` or a square 0/1 matrix (``t[u][v]``: u beats v)."""
    if not isinstance(t, Tournament):
        rows = [list(r) for r in t]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise InvalidInput("matrix is not square")
        t = Tournament.from_edges(n, ((u, v) for u in range(n) for v in range(n) if rows[u][v]))
    return MatrixOracle(t, k)


# --------------------------------------------------------------------------
# wrappers


@dataclass
class OracleStats:
    query_count: int = 0
    token_proxy: int = 0
    per_round_counts: list[int] = field(default_factory=list)


class CountingOracle(Oracle):
    def __init__(self, inner: Oracle):
        self.inner = inner
        self.k = inner.k
        self.n = inner.n
        self.stats = OracleStats()

    def _respond(self, items):
        resp = self.inner.query(items)
        st = self.stats
        st.query_count += 1
        st.token_proxy += len(items)
        if not st.per_round_counts:
            st.per_round_counts.append(0)
        st.per_round_counts[-1] += 1
        return resp

    def new_round(self):
        self.stats.per_round_counts.append(0)
        self.inner.new_round()

    def close(self):
        self.inner.close()


def wrap_counting(oracle: Oracle) -> CountingOracle:
    return CountingOracle(oracle)


def _record(items, edges) -> dict:
    return {"items": sorted(items), "edges": sorted([list(e) for e in edges])}


class RecordingOracle(Oracle):
    """Passes queries through and logs ``{"items", "edges"}`` records.

    ``sink`` is a list (records are appended) or a writable text stream
    (one JSON object per line).
    """

    def __init__(self, inner: Oracle, sink: Union[list, IO[str]]):
        self.inner = inner
        self.k = inner.k
        self.n = inner.n
        self.sink = sink

    def _respond(self, items):
        resp = self.inner.query(items)
        rec = _record(items, resp)
        if isinstance(self.sink, list):
            self.sink.append(rec)
        else:
            self.sink.write(json.dumps(rec, separators=(",", ":")) + "\n")
            self.sink.flush()
        return resp

    def new_round(self):
        self.inner.new_round()

    def close(self):
        self.inner.close()


def wrap_recording(oracle: Oracle, log_sink) -> RecordingOracle:
    return RecordingOracle(oracle, log_sink)


def load_replay_log(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ProtocolError(f"replay log line {lineno}: {exc}") from None
    return records


class ReplayOracle(Oracle):
    """Answers from a recorded log keyed by the sorted item set."""

    def __init__(self, log_records: Union[Iterable[dict], str, Path], k: int, n: Optional[int] = None):
        if isinstance(log_records, (str, Path)):
            log_records = load_replay_log(log_records)
        self.k = _check_k(k)
        self.n = n
        self._table: dict[tuple[int, ...], frozenset[Edge]] = {}
        for rec in log_records:
            key = tuple(sorted(rec["items"]))
            self._table[key] = frozenset((int(w), int(lo)) for w, lo in rec["edges"])

    def _respond(self, items):
        key = tuple(sorted(items))
        try:
            return self._table[key]
        except KeyError:
            raise ReplayMiss(f"no recorded response for {list(key)}") from None


def make_replay_oracle(log_records, k: int, n: Optional[int] = None) -> ReplayOracle:
    return ReplayOracle(log_records, k, n)


# --------------------------------------------------------------------------
# external process


def parse_response(msg: dict, expected_id: int, items: Sequence[int]) -> frozenset[Edge]:
    """Validate one ``result`` message and turn it into an edge set."""
    if not isinstance(msg, dict) or msg.get("type") != "result":
        raise ProtocolError(f"expected a result message, got {msg!r}")
    if msg.get("id") != expected_id:
        raise ProtocolError(f"response id {msg.get('id')!r} does not match request {expected_id}")
    has_order = "order" in msg
    has_edges = "edges" in msg
    if has_order == has_edges:
        raise ProtocolError("result must carry exactly one of 'order' or 'edges'")
    item_set = set(items)
    if has_order:
        order = msg["order"]
        if (not isinstance(order, list) or not all(type(v) is int for v in order)
                or len(order) != len(items) or set(order) != item_set):
            raise ProtocolError(f"order {order!r} is not a permutation of {sorted(item_set)}")
        return order_to_edges(order)
    edges = msg["edges"]
    if not isinstance(edges, list):
        raise ProtocolError("'edges' must be a list")
    out = set()
    for e in edges:
        if (not isinstance(e, list) or len(e) != 2 or not all(type(v) is int for v in e)):
            raise ProtocolError(f"malformed edge {e!r}")
        w, lo = e
        if w == lo or w not in item_set or lo not in item_set:
            raise ProtocolError(f"edge {e!r} is not a pair of distinct queried items")
        out.add((w, lo))
    return frozenset(out)


class ExternalOracle(Oracle):
    """Oracle backed by a child process speaking line-delimited JSON.

    Requests: ``{"type":"query","id":N,"items":[...],"payloads":{...}}``;
    the child answers ``{"type":"result","id":N,"order":[...]}`` or
    ``{"type":"result","id":N,"edges":[[w,l],...]}``.  On timeout the child is
    restarted and the request resent, up to ``retries`` extra attempts.
    One request is in flight at a time.
    """

    def __init__(self, command, k: int, timeout: float = 30.0, retries: int = 1,
                 payloads: Optional[Mapping[int, str]] = None,
                 env: Optional[Mapping[str, str]] = None, n: Optional[int] = None):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise InvalidInput("empty oracle command")
        self.k = _check_k(k)
        self.n = n
        self.timeout = timeout
        self.retries = retries
        self.payloads = dict(payloads) if payloads is not None else None
        self.env = {**os.environ, **env} if env else None
        self._next_id = 0
        self._proc: Optional[subprocess.Popen] = None
        self._lines: Optional[queue.Queue] = None
        self._lock = threading.Lock()

    def _spawn(self):
        self._proc = subprocess.Popen(
            self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            encoding="utf-8", bufsize=1, env=self.env,
        )
        lines: queue.Queue = queue.Queue()

        def pump(stream, q):
            for line in stream:
                q.put(line)
            q.put(None)

        threading.Thread(target=pump, args=(self._proc.stdout, lines), daemon=True).start()
        self._lines = lines

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def _exchange(self, request: dict) -> dict:
        if self._proc is None:
            self._spawn()
        try:
            self._proc.stdin.write(json.dumps(request, separators=(",", ":")) + "\n")
            self._proc.stdin.flush()
        except BrokenPipeError:
            raise ProtocolError("oracle process closed its input") from None
        while True:
            line = self._lines.get(timeout=self.timeout)
            if line is None:
                raise ProtocolError("oracle process exited before answering")
            if line.strip():
                break
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line {line.strip()!r}: {exc}") from None

    def _respond(self, items):
        with self._lock:
            self._next_id += 1
            qid = self._next_id
            request = {"type": "query", "id": qid, "items": list(items)}
            if self.payloads is not None:
                request["payloads"] = {str(v): self.payloads[v] for v in items}
            for attempt in range(self.retries + 1):
                try:
                    msg = self._exchange(request)
                except queue.Empty:
                    log.warning("oracle timed out on request %d (attempt %d)", qid, attempt + 1)
                    self._kill()
                    continue
                return parse_response(msg, qid, items)
            raise OracleTimeout(f"no answer to request {qid} after {self.retries + 1} attempts")

    def close(self):
        if self._proc is None:
            return
        try:
            self._proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
            self._proc.stdin.flush()
            self._proc.stdin.close()
            self._proc.wait(timeout=min(self.timeout, 5.0))
        except (BrokenPipeError, OSError, subprocess.TimeoutExpired):
            pass
        self._kill()


def make_external_oracle(command, k: int, timeout: float = 30.0, retries: int = 1, **kwargs) -> ExternalOracle:
    return ExternalOracle(command, k, timeout=timeout, retries=retries, **kwargs)
