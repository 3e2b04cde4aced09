"""Ground-truth checks for outputs and recorded traces.

Everything here recomputes reachability on the full tournament from
scratch (a plain BFS per vertex), independent of the bitset machinery used
by the schedulers.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

from .graph import RevealedGraph, Tournament
from .scheduler import RunTrace


def _bfs(adj: Sequence[Sequence[int]], s: int) -> set[int]:
    seen = {s}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                dq.append(v)
    seen.discard(s)
    return seen


def true_inreach(t: Tournament) -> list[int]:
    """|{u != v : u reaches v}| for every v, by BFS on reversed edges."""
    pred = [[] for _ in range(t.n)]
    for u, v in t.edges():
        pred[v].append(u)
    return [len(_bfs(pred, v)) for v in range(t.n)]


def selection_violations(top: Sequence[int], t: Tournament) -> list[str]:
    """Check internal ordering and rank dominance of a top-m answer."""
    out = []
    if len(set(top)) != len(top):
        out.append(f"output repeats vertices: {list(top)}")
    if any(not 0 <= v < t.n for v in top):
        out.append(f"output has out-of-range vertices: {list(top)}")
        return out
    r = true_inreach(t)
    for a, b in zip(top, top[1:]):
        if r[a] > r[b]:
            out.append(f"ordering: {a} (in-reach {r[a]}) listed before {b} (in-reach {r[b]})")
    rest = set(range(t.n)) - set(top)
    if top and rest:
        worst_in = max(r[v] for v in top)
        best_out = min(r[v] for v in rest)
        if worst_in > best_out:
            out.append(f"dominance: output max in-reach {worst_in} > excluded min {best_out}")
    return out


def verify_trace(doc: dict, trace: RunTrace, t: Tournament) -> list[str]:
    """Replay a recorded run against ground truth; returns violation messages."""
    out = []
    if trace.n != t.n:
        return [f"trace covers {trace.n} vertices, ground truth has {t.n}"]
    n, k = trace.n, trace.k
    g = RevealedGraph(n)
    for r_idx, rnd in enumerate(trace.rounds, 1):
        touched = set()
        for q in rnd.queries:
            if len(q) < 2 or len(q) > k:
                out.append(f"round {r_idx}: query {q} has size outside [2, {k}]")
            if len(set(q)) != len(q) or any(not 0 <= v < n for v in q):
                out.append(f"round {r_idx}: query {q} is malformed")
            touched.update(q)
        if not rnd.new_edges:
            out.append(f"round {r_idx}: no new edge revealed")
        for u, v in rnd.new_edges:
            if not (0 <= u < n and 0 <= v < n) or not t.beats(u, v):
                out.append(f"round {r_idx}: edge ({u}, {v}) is not in the ground truth")
            elif u not in touched or v not in touched:
                out.append(f"round {r_idx}: edge ({u}, {v}) joins vertices not queried this round")
            elif g.has_edge(u, v):
                out.append(f"round {r_idx}: edge ({u}, {v}) reported new twice")
        g.add_edges([e for e in rnd.new_edges if 0 <= e[0] < n and 0 <= e[1] < n and t.beats(*e)], "keep_first")
    if out:
        return out

    top = [int(v) for v in doc.get("top", [])]
    if len(top) != trace.m:
        out.append(f"output has {len(top)} vertices, expected m={trace.m}")
    s = g.structure()
    if trace.algorithm == "blitz":
        unresolved = [v for v in top if s.kappa[v] != n - 1]
        if unresolved:
            out.append(f"output vertices not resolved at termination: {unresolved}")
    claimed = doc.get("top_inreach")
    if claimed is not None and [s.in_count[v] for v in top] != list(claimed):
        out.append("top_inreach does not match the replayed graph")
    if "total_queries" in doc and doc["total_queries"] != trace.total_queries:
        out.append("total_queries does not match the recorded rounds")
    out.extend(selection_violations(top, t))
    return out
