"""Top-m selection schedulers.

``blitzrank`` is the practical algorithm: it stops once the ``m`` vertices
with the smallest discovered in-reach are all resolved, and otherwise
queries one representative from each of the earliest unresolved SCCs of the
condensation.  ``transitive_sort`` and ``general_sort`` are the
finalization-threshold variants for transitive and arbitrary tournaments.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .condensation import TieredRanking, tiered_ranking
from .errors import InvalidInput, InvalidTrace, NotTransitive, StalledOracle, TourneyError
from .graph import Edge, GraphStructure, RevealedGraph, finalization_threshold, spectrum_of

TIE_BREAKS = ("id", "dagger")
REP_SELECTS = ("min_id", "min_kappa_then_id")


@dataclass(frozen=True)
class RunOptions:
    """Run parameters.

    ``tie_break="dagger"`` orders candidate SCCs by (condensation in-reach,
    condensation out-reach, min id) and forces ``rep_select`` to
    ``"min_kappa_then_id"``.
    """

    k: int
    m: int
    tie_break: str = "id"
    rep_select: Optional[str] = None
    batch: bool = False
    checkpoint_all_m: bool = False
    on_conflict: str = "error"

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInput(f"k must be >= 2, got {self.k}")
        if self.m < 1:
            raise InvalidInput(f"m must be >= 1, got {self.m}")
        if self.tie_break not in TIE_BREAKS:
            raise InvalidInput(f"unknown tie_break {self.tie_break!r}")
        rep = self.rep_select
        if rep is None:
            rep = "min_kappa_then_id" if self.tie_break == "dagger" else "min_id"
            object.__setattr__(self, "rep_select", rep)
        if rep not in REP_SELECTS:
            raise InvalidInput(f"unknown rep_select {rep!r}")
        if self.tie_break == "dagger" and rep != "min_kappa_then_id":
            raise InvalidInput("dagger tie-break requires rep_select='min_kappa_then_id'")
        if self.on_conflict not in ("error", "keep_first"):
            raise InvalidInput(f"unknown conflict policy {self.on_conflict!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RoundRecord:
    queries: list[list[int]] = field(default_factory=list)
    new_edges: list[Edge] = field(default_factory=list)
    resolved: int = 0
    resolved_prefix: Optional[int] = None


@dataclass
class RunTrace:
    """Per-round log of a run.

    ``resolved_prefix`` of a round is the length of the certified prefix
    after that round's edges were merged: the largest ``m'`` for which the
    algorithm's stop test would already pass.  ``initial_prefix`` is the same
    quantity before any query.
    """

    n: int
    k: int
    m: int
    algorithm: str
    options: dict
    rounds: list[RoundRecord] = field(default_factory=list)
    initial_prefix: Optional[int] = None
    graph: Optional[RevealedGraph] = None

    @property
    def total_queries(self) -> int:
        return sum(len(r.queries) for r in self.rounds)

    @property
    def has_checkpoints(self) -> bool:
        return self.initial_prefix is not None and all(r.resolved_prefix is not None for r in self.rounds)


@dataclass
class RunResult:
    top: list[int]
    top_inreach: list[int]
    tiers: TieredRanking
    trace: RunTrace

    @property
    def total_queries(self) -> int:
        return self.trace.total_queries

    @property
    def rounds(self) -> int:
        return len(self.trace.rounds)


# --------------------------------------------------------------------------
# shared machinery


class _Run:
    def __init__(self, n: int, oracle, opts: RunOptions, algorithm: str):
        if n < 1:
            raise InvalidInput(f"n must be >= 1, got {n}")
        if opts.m > n:
            raise InvalidInput(f"m={opts.m} exceeds n={n}")
        if oracle.k != opts.k:
            raise InvalidInput(f"oracle k={oracle.k} differs from options k={opts.k}")
        if getattr(oracle, "n", None) not in (None, n):
            raise InvalidInput(f"oracle covers {oracle.n} vertices, run has {n}")
        self.n = n
        self.oracle = oracle
        self.opts = opts
        self.g = RevealedGraph(n)
        self.trace = RunTrace(n, opts.k, opts.m, algorithm, opts.to_dict(), graph=self.g)

    def checkpoint(self, s: GraphStructure, prefix: int) -> None:
        keep = self.opts.checkpoint_all_m
        if self.trace.rounds:
            last = self.trace.rounds[-1]
            last.resolved = sum(s.resolved())
            if keep:
                last.resolved_prefix = prefix
        elif keep:
            self.trace.initial_prefix = prefix

    def run_round(self, groups: Sequence[Sequence[int]]) -> None:
        g = self.g
        rec = RoundRecord()
        self.trace.rounds.append(rec)
        g.round += 1
        self.oracle.new_round()
        # groups are disjoint; sorting fixes the merge order
        for items in sorted(groups, key=lambda q: sorted(q)):
            for attempt in range(2):
                resp = self.oracle.query(items)
                rec.queries.append(list(items))
                added = g.insert(sorted(resp), self.opts.on_conflict)
                rec.new_edges.extend(added)
                if added:
                    break
            else:
                raise StalledOracle(f"query {list(items)} revealed no new edge twice")
        rec.new_edges.sort()

    def result(self, top: list[int], s: GraphStructure, secondary_key=None) -> RunResult:
        return RunResult(
            top=top,
            top_inreach=[s.in_count[v] for v in top],
            tiers=tiered_ranking(self.g, secondary_key),
            trace=self.trace,
        )


def _rep(s: GraphStructure, c: int, rep_select: str) -> int:
    members = s.comps[c]
    if rep_select == "min_id" or len(members) == 1:
        return members[0]
    return min(members, key=lambda v: (s.kappa[v], v))


def _batch_groups(cands: list[int], reps: list[int], s: GraphStructure, k: int) -> list[list[int]]:
    """Split the tied frontier into disjoint groups of at most ``k``.

    Only candidates sharing the minimum condensation in-reach are split
    across groups (those are pairwise unconnected, so every group reveals a
    new edge).  The last group is topped up from the following candidates
    that have no known relation to it.  A frontier no larger than ``k``
    yields the single sequential query.
    """
    cin = s.cond_in_count
    frontier = 1
    while frontier < len(cands) and cin[cands[frontier]] == cin[cands[0]]:
        frontier += 1
    if frontier <= k:
        return [reps[:k]]
    groups = [list(range(i, min(i + k, frontier))) for i in range(0, frontier, k)]
    last = groups[-1]
    known = 0
    for i in last:
        c = cands[i]
        known |= s.cond_in_bits[c] | s.cond_out_bits[c] | (1 << c)
    for i in range(frontier, len(cands)):
        if len(last) == k:
            break
        if not known >> cands[i] & 1:
            last.append(i)
    if len(last) < 2:
        groups.pop()
    return [[reps[i] for i in grp] for grp in groups]


# --------------------------------------------------------------------------
# algorithms


def blitzrank(n: int, oracle, opts: RunOptions) -> RunResult:
    run = _Run(n, oracle, opts, "blitz")
    m, k = opts.m, opts.k
    dagger = opts.tie_break == "dagger"
    target = n - 1
    while True:
        s = run.g.structure()
        inc = s.in_count
        kappa = s.kappa
        basis = sorted(range(n), key=lambda v: (inc[v], v))
        prefix = 0
        while prefix < n and kappa[basis[prefix]] == target:
            prefix += 1
        run.checkpoint(s, prefix)
        if prefix >= m:
            return run.result(basis[:m], s)

        cin = s.cond_in_count
        cands = [c for c, members in enumerate(s.comps) if kappa[members[0]] != target]
        if dagger:
            cout = s.cond_out_count
            cands.sort(key=lambda c: (cin[c], cout[c], c))
        else:
            cands.sort(key=lambda c: (cin[c], c))
        reps = [_rep(s, c, opts.rep_select) for c in cands]
        if opts.batch:
            groups = _batch_groups(cands, reps, s, k)
        else:
            groups = [reps[:k]]
        if len(groups[0]) < 2:
            raise TourneyError("fewer than two unresolved SCCs at a non-terminal round")
        run.run_round(groups)


def transitive_sort(n: int, oracle, opts: RunOptions) -> RunResult:
    """Query the lowest-ranked candidates until the finalization threshold reaches m."""
    run = _Run(n, oracle, opts, "transitive")
    m, k = opts.m, opts.k
    while True:
        s = run.g.structure()
        if not s.is_acyclic():
            cyc = next(c for c in s.comps if len(c) > 1)
            raise NotTransitive(f"revealed cycle among {list(cyc)}")
        spec = spectrum_of(s.in_count)
        mt = finalization_threshold(spec.values)
        run.checkpoint(s, mt)
        if mt >= m:
            return run.result(list(spec.basis[:m]), s)
        kp = min(k, n - mt)
        query = list(spec.basis[mt:mt + kp])
        if kp < k:
            query += sorted(spec.basis[:mt])[:k - kp]
        run.run_round([query])


def general_sort(n: int, oracle, opts: RunOptions) -> RunResult:
    """Finalization on the condensation; output tiers cut at the boundary tier."""
    run = _Run(n, oracle, opts, "general")
    m, k = opts.m, opts.k
    while True:
        s = run.g.structure()
        cin = s.cond_in_count
        nt = len(s.comps)
        cbasis = sorted(range(nt), key=lambda c: (cin[c], c))
        mt = finalization_threshold([cin[c] for c in cbasis])
        top_size = sum(len(s.comps[c]) for c in cbasis[:mt])
        run.checkpoint(s, top_size)
        if top_size >= m:
            break
        kp = min(k, nt - mt)
        chosen = cbasis[mt:mt + kp]
        if kp < k:
            chosen += sorted(cbasis[:mt])[:k - kp]
        run.run_round([[_rep(s, c, opts.rep_select) for c in chosen]])
    top: list[int] = []
    for c in cbasis:
        need = m - len(top)
        if need <= 0:
            break
        top.extend(s.comps[c][:need])
    return run.result(top, s)


ALGORITHMS = {"blitz": blitzrank, "transitive": transitive_sort, "general": general_sort}


def extract_checkpoints(trace: RunTrace) -> list[int]:
    """Return ``[T_1, ..., T_n]`` from a full-sort trace."""
    if trace.m != trace.n:
        raise InvalidTrace(f"checkpoints need a full-sort run (m={trace.m}, n={trace.n})")
    if not trace.has_checkpoints:
        raise InvalidTrace("trace was recorded without checkpoint_all_m")
    out = [None] * trace.n
    filled = 0

    def fill(prefix, queries):
        nonlocal filled
        while filled < min(prefix, trace.n):
            out[filled] = queries
            filled += 1

    fill(trace.initial_prefix, 0)
    queries = 0
    for r in trace.rounds:
        queries += len(r.queries)
        fill(r.resolved_prefix, queries)
    if filled < trace.n:
        raise InvalidTrace("trace ends before every position was certified")
    return out


# --------------------------------------------------------------------------
# serialization


def trace_document(result: RunResult) -> dict:
    t = result.trace
    rounds = []
    for r in t.rounds:
        entry = {
            "queries": [list(q) for q in r.queries],
            "new_edges": [list(e) for e in r.new_edges],
            "resolved": r.resolved,
        }
        if r.resolved_prefix is not None:
            entry["resolved_prefix"] = r.resolved_prefix
        rounds.append(entry)
    doc = {
        "n": t.n,
        "k": t.k,
        "m": t.m,
        "algorithm": t.algorithm,
        "options": t.options,
        "rounds": rounds,
        "total_queries": t.total_queries,
        "top": list(result.top),
        "top_inreach": list(result.top_inreach),
        "tiers": [list(tier) for tier in result.tiers.tiers],
    }
    if t.initial_prefix is not None:
        doc["initial_prefix"] = t.initial_prefix
    return doc


def dumps_trace(result: RunResult) -> str:
    return json.dumps(trace_document(result), separators=(",", ":")) + "\n"


def write_trace(result: RunResult, path) -> None:
    Path(path).write_text(dumps_trace(result), encoding="utf-8")


def trace_from_document(doc: dict) -> RunTrace:
    """Rebuild a :class:`RunTrace` (with its terminal graph) from JSON."""
    try:
        n, k, m = int(doc["n"]), int(doc["k"]), int(doc["m"])
        g = RevealedGraph(n)
        trace = RunTrace(n, k, m, doc.get("algorithm", "blitz"), dict(doc.get("options", {})),
                         initial_prefix=doc.get("initial_prefix"), graph=g)
        for r in doc["rounds"]:
            rec = RoundRecord(
                queries=[[int(v) for v in q] for q in r["queries"]],
                new_edges=[(int(a), int(b)) for a, b in r["new_edges"]],
                resolved=int(r.get("resolved", 0)),
                resolved_prefix=r.get("resolved_prefix"),
            )
            g.add_edges(rec.new_edges, "keep_first")
            trace.rounds.append(rec)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidTrace(f"malformed trace document: {exc}") from None
    return trace


def read_trace(path) -> tuple[RunTrace, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidTrace(f"trace is not valid JSON: {exc}") from None
    return trace_from_document(doc), doc
