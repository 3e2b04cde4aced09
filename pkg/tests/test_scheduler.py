import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from tourney.errors import ContradictoryEdge, InvalidInput, InvalidTrace, NotTransitive, StalledOracle
from tourney.graph import RevealedGraph, Tournament, planted_tiers, random_tournament
from tourney.oracle import MatrixOracle, Oracle, PermutationOracle
from tourney.scheduler import (
    RunOptions,
    blitzrank,
    dumps_trace,
    extract_checkpoints,
    general_sort,
    read_trace,
    trace_document,
    trace_from_document,
    transitive_sort,
    write_trace,
)

from tests.helpers import selection_ok, random_perm, random_tournament_edges, true_ranks


def tourney_from(n, edges):
    return Tournament.from_edges(n, edges)


def cyclic_tiers_example():
    """a > {b,c,d} (cycle) > e > f, completed consistently with the tiers."""
    a, b, c, d, e, f = range(6)
    edges = [(b, c), (c, d), (d, b)]
    order = [[a], [b, c, d], [e], [f]]
    for i, hi in enumerate(order):
        for lo in order[i + 1:]:
            edges += [(u, v) for u in hi for v in lo]
    return Tournament.from_edges(6, edges)


def frontier_violations(trace):
    """Replay the trace and check the tied-frontier property before each round."""
    g = RevealedGraph(trace.n)
    bad = []
    for r in trace.rounds:
        s = g.structure()
        unresolved = [c for c, mem in enumerate(s.comps) if s.kappa[mem[0]] != trace.n - 1]
        unresolved.sort(key=lambda c: (s.cond_in_count[c], c))
        if len(unresolved) < 2:
            bad.append("fewer than two unresolved components")
        else:
            x, y = unresolved[:2]
            if s.cond_in_count[x] != s.cond_in_count[y]:
                bad.append("leading components not tied")
            if s.cond_in_bits[y] >> x & 1 or s.cond_in_bits[x] >> y & 1:
                bad.append("leading components connected")
        before = len(g.edges)
        g.add_edges(r.new_edges)
        if len(g.edges) == before:
            bad.append("round without progress")
    return bad


# ---------------------------------------------------------------- options

def test_run_options_validation():
    with pytest.raises(InvalidInput):
        RunOptions(k=1, m=1)
    with pytest.raises(InvalidInput):
        RunOptions(k=3, m=0)
    with pytest.raises(InvalidInput):
        RunOptions(k=3, m=1, tie_break="random")
    with pytest.raises(InvalidInput):
        RunOptions(k=3, m=1, tie_break="dagger", rep_select="min_id")
    with pytest.raises(InvalidInput):
        RunOptions(k=3, m=1, on_conflict="ignore")
    assert RunOptions(k=3, m=1, tie_break="dagger").rep_select == "min_kappa_then_id"
    assert RunOptions(k=3, m=1).rep_select == "min_id"


def test_run_preconditions():
    o = PermutationOracle(list(range(5)), 3)
    with pytest.raises(InvalidInput):
        blitzrank(5, o, RunOptions(k=3, m=6))
    with pytest.raises(InvalidInput):
        blitzrank(5, o, RunOptions(k=4, m=2))
    with pytest.raises(InvalidInput):
        blitzrank(6, o, RunOptions(k=3, m=2))


# ---------------------------------------------------------------- blitzrank

def test_single_vertex():
    res = blitzrank(1, PermutationOracle([0], 2), RunOptions(k=2, m=1))
    assert res.total_queries == 0 and res.top == [0] and res.top_inreach == [0]


def test_horses_identity_batch():
    res = blitzrank(25, PermutationOracle(list(range(25)), 5), RunOptions(k=5, m=3, batch=True))
    assert res.total_queries == 7 and res.rounds == 3
    assert res.top == [0, 1, 2] and res.top_inreach == [0, 1, 2]
    assert [len(r.queries) for r in res.trace.rounds] == [5, 1, 1]
    assert res.trace.rounds[0].queries[0] == [0, 1, 2, 3, 4]


def test_horses_identity_sequential_is_valid():
    t = Tournament.from_permutation(list(range(25)))
    res = blitzrank(25, MatrixOracle(t, 5), RunOptions(k=5, m=3))
    assert res.top == [0, 1, 2]
    assert res.total_queries <= 9


def test_cyclic_tiers_example():
    t = cyclic_tiers_example()
    res = blitzrank(6, MatrixOracle(t, 3), RunOptions(k=3, m=4))
    assert res.tiers.tiers == ((0,), (1, 2, 3), (4,), (5,))
    assert res.top == [0, 1, 2, 3]
    assert res.top_inreach == [0, 3, 3, 3]
    assert selection_ok(res.top, 6, list(t.edges()))
    # with m=2 any one of the tied members is a valid second entry
    res2 = blitzrank(6, MatrixOracle(t, 3), RunOptions(k=3, m=2))
    assert res2.top[0] == 0 and res2.top[1] in (1, 2, 3)
    r = true_ranks(6, list(t.edges()))
    assert r[1] == r[2] == r[3]


def test_top_sorted_and_resolved():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(2, 15)
        t = random_tournament(n, rng)
        m = rng.randint(1, n)
        k = rng.randint(2, 6)
        res = blitzrank(n, MatrixOracle(t, k), RunOptions(k=k, m=m))
        s = res.trace.graph.structure()
        assert res.top_inreach == sorted(res.top_inreach)
        assert all(s.kappa[v] == n - 1 for v in res.top)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 14), st.integers(2, 6), st.integers(0, 10**6), st.booleans(),
       st.sampled_from(["id", "dagger"]))
def test_blitzrank_valid_on_random_tournaments(n, k, seed, batch, tie):
    rng = random.Random(seed)
    edges = random_tournament_edges(n, rng)
    t = tourney_from(n, edges)
    m = rng.randint(1, n)
    res = blitzrank(n, MatrixOracle(t, k), RunOptions(k=k, m=m, batch=batch, tie_break=tie))
    assert len(res.top) == m
    assert selection_ok(res.top, n, edges)
    assert res.total_queries <= n * (n - 1) // 2
    assert all(r.new_edges for r in res.trace.rounds)
    if not batch:
        assert frontier_violations(res.trace) == []
    # resolved in-reaches are true in-reaches in order
    tr = true_ranks(n, edges)
    s = res.trace.graph.structure()
    for u in res.top:
        for v in range(n):
            if s.in_count[u] <= s.in_count[v]:
                assert tr[u] <= tr[v]


def test_blitzrank_on_planted_tiers():
    rng = random.Random(21)
    for _ in range(30):
        sizes = [rng.choice([1, 3, 4]) for _ in range(rng.randint(2, 6))]
        t = planted_tiers(sizes, rng)
        m = rng.randint(1, t.n)
        res = blitzrank(t.n, MatrixOracle(t, 4), RunOptions(k=4, m=m, tie_break="dagger"))
        assert selection_ok(res.top, t.n, list(t.edges()))


def test_schedule_independent_of_m():
    perm = random_perm(40, 1)
    full = blitzrank(40, PermutationOracle(perm, 5), RunOptions(k=5, m=40))
    seq = [q for r in full.trace.rounds for q in r.queries]
    for m in (1, 5, 17, 40):
        part = blitzrank(40, PermutationOracle(perm, 5), RunOptions(k=5, m=m))
        pq = [q for r in part.trace.rounds for q in r.queries]
        assert pq == seq[:len(pq)]


class _EmptyOracle(Oracle):
    k = 3

    def _respond(self, items):
        return frozenset()


class _Liar(Oracle):
    """Truthful, except that the second answer also flips the first edge seen."""

    def __init__(self, perm, k):
        self.inner = PermutationOracle(perm, k)
        self.k = k
        self.calls = 0
        self.first = None

    def _respond(self, items):
        self.calls += 1
        edges = set(self.inner.query(items))
        if self.calls == 1:
            self.first = min(edges)
        elif self.calls == 2:
            u, v = self.first
            edges.add((v, u))
        return frozenset(edges)


def test_stalled_oracle():
    with pytest.raises(StalledOracle):
        blitzrank(3, _EmptyOracle(), RunOptions(k=3, m=1))


def test_contradiction_policy():
    perm = random_perm(12, 0)
    with pytest.raises(ContradictoryEdge):
        blitzrank(12, _Liar(perm, 4), RunOptions(k=4, m=3))
    res = blitzrank(12, _Liar(perm, 4), RunOptions(k=4, m=3, on_conflict="keep_first"))
    assert res.top == perm[:3]
    assert res.trace.graph.conflicts


# ---------------------------------------------------------------- transitive_sort

def test_transitive_k_at_least_n():
    perm = random_perm(10, 5)
    res = transitive_sort(10, PermutationOracle(perm, 10), RunOptions(k=10, m=10))
    assert res.total_queries == 1 and res.top == perm


def test_transitive_top1_bound():
    for seed in range(30):
        res = transitive_sort(25, PermutationOracle(random_perm(25, seed), 5), RunOptions(k=5, m=1))
        assert res.total_queries <= 6


def test_transitive_prefix_and_padding():
    for seed in range(30):
        perm = random_perm(50, seed)
        res = transitive_sort(50, PermutationOracle(perm, 5), RunOptions(k=5, m=5))
        assert res.top == perm[:5]
        assert res.top_inreach == [0, 1, 2, 3, 4]
        for r in res.trace.rounds:
            assert len(r.queries[0]) == 5


def test_transitive_detects_cycle():
    t = Tournament.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(NotTransitive):
        transitive_sort(3, MatrixOracle(t, 3), RunOptions(k=3, m=1))


# ---------------------------------------------------------------- general_sort

def test_general_single_scc_lowest_ids():
    rng = random.Random(0)
    t = planted_tiers([7], rng)
    assert all(r == 6 for r in true_ranks(7, list(t.edges())))
    for m in range(1, 8):
        res = general_sort(7, MatrixOracle(t, 3), RunOptions(k=3, m=m))
        assert len(set(res.top)) == m
        # lowest ids of the revealed boundary tier
        tier = next(x for x in res.tiers.tiers if res.top[0] in x)
        assert res.top == sorted(tier)[:m] or len(tier) < m
    assert general_sort(7, MatrixOracle(t, 7), RunOptions(k=7, m=4)).top == [0, 1, 2, 3]


def test_general_matches_transitive():
    for seed in range(100):
        perm = random_perm(30, seed)
        m = seed % 30 + 1
        a = general_sort(30, PermutationOracle(perm, 5), RunOptions(k=5, m=m))
        b = transitive_sort(30, PermutationOracle(perm, 5), RunOptions(k=5, m=m))
        assert a.top == b.top == perm[:m]


def test_general_tiered_boundary():
    # tiers {0,1,2} cycle > {3} > {4,5,6} cycle
    tiers = [[0, 1, 2], [3], [4, 5, 6]]
    edges = [(0, 1), (1, 2), (2, 0), (4, 5), (5, 6), (6, 4)]
    for i, hi in enumerate(tiers):
        for lo in tiers[i + 1:]:
            edges += [(u, v) for u in hi for v in lo]
    t = Tournament.from_edges(7, edges)
    res = general_sort(7, MatrixOracle(t, 3), RunOptions(k=3, m=4))
    assert sorted(res.top[:3]) == [0, 1, 2] and res.top[3] == 3
    res5 = general_sort(7, MatrixOracle(t, 3), RunOptions(k=3, m=5))
    assert res5.top[4] == 4
    assert selection_ok(res5.top, 7, edges)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(2, 5), st.integers(0, 10**6))
def test_general_valid_on_random(n, k, seed):
    rng = random.Random(seed)
    edges = random_tournament_edges(n, rng)
    m = rng.randint(1, n)
    res = general_sort(n, MatrixOracle(tourney_from(n, edges), k), RunOptions(k=k, m=m))
    assert selection_ok(res.top, n, edges)
    assert all(r.new_edges for r in res.trace.rounds)


# ---------------------------------------------------------------- checkpoints

def test_checkpoints_monotone_and_match_fresh_runs():
    perm = random_perm(25, 3)
    full = blitzrank(25, PermutationOracle(perm, 5), RunOptions(k=5, m=25, checkpoint_all_m=True))
    T = extract_checkpoints(full.trace)
    assert T == sorted(T) and len(T) == 25
    assert T[0] <= 6
    for m in range(1, 26):
        assert blitzrank(25, PermutationOracle(perm, 5), RunOptions(k=5, m=m)).total_queries == T[m - 1]


def test_checkpoints_for_other_algorithms():
    perm = random_perm(20, 9)
    for algo in (transitive_sort, general_sort):
        full = algo(20, PermutationOracle(perm, 4), RunOptions(k=4, m=20, checkpoint_all_m=True))
        T = extract_checkpoints(full.trace)
        assert T == sorted(T)
        for m in (1, 7, 20):
            assert algo(20, PermutationOracle(perm, 4), RunOptions(k=4, m=m)).total_queries == T[m - 1]


def test_checkpoint_errors():
    o = PermutationOracle(list(range(6)), 3)
    with pytest.raises(InvalidTrace):
        extract_checkpoints(blitzrank(6, o, RunOptions(k=3, m=6)).trace)
    with pytest.raises(InvalidTrace):
        extract_checkpoints(blitzrank(6, o, RunOptions(k=3, m=3, checkpoint_all_m=True)).trace)


# ---------------------------------------------------------------- serialization

def test_trace_roundtrip(tmp_path):
    t = random_tournament(12, random.Random(2))
    res = blitzrank(12, MatrixOracle(t, 4), RunOptions(k=4, m=12, checkpoint_all_m=True))
    doc = trace_document(res)
    assert set(doc) >= {"n", "k", "m", "options", "rounds", "total_queries", "top", "top_inreach", "tiers"}
    assert set(doc["rounds"][0]) >= {"queries", "new_edges", "resolved"}
    path = tmp_path / "trace.json"
    write_trace(res, path)
    trace, doc2 = read_trace(path)
    assert doc2 == json.loads(dumps_trace(res))
    assert trace.total_queries == res.total_queries
    assert trace.graph.edges == res.trace.graph.edges
    assert extract_checkpoints(trace) == extract_checkpoints(res.trace)


def test_trace_document_errors(tmp_path):
    with pytest.raises(InvalidTrace):
        trace_from_document({"n": 3})
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(InvalidTrace):
        read_trace(p)


def test_deterministic_traces():
    t = random_tournament(20, random.Random(5))
    a = blitzrank(20, MatrixOracle(t, 5), RunOptions(k=5, m=7, batch=True))
    b = blitzrank(20, MatrixOracle(t, 5), RunOptions(k=5, m=7, batch=True))
    assert dumps_trace(a) == dumps_trace(b)
