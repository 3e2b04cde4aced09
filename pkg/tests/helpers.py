"""Independent brute-force references used across the test suite.

These work on plain adjacency matrices with Floyd-Warshall closure and share
no code with the package's bitset machinery.
"""

import itertools
import random
import sys
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"
PY = sys.executable


def fixture_cmd(name, *args):
    return [PY, str(FIXTURES / name), *map(str, args)]


def closure(n, edges):
    r = [[False] * n for _ in range(n)]
    for u, v in edges:
        r[u][v] = True
    for w in range(n):
        rw = r[w]
        for u in range(n):
            if r[u][w]:
                ru = r[u]
                for v in range(n):
                    if rw[v]:
                        ru[v] = True
    return r


def inreach_sets(n, edges):
    r = closure(n, edges)
    return [frozenset(u for u in range(n) if u != v and r[u][v]) for v in range(n)]


def outreach_sets(n, edges):
    r = closure(n, edges)
    return [frozenset(w for w in range(n) if w != v and r[v][w]) for v in range(n)]


def kappa_brute(n, edges):
    ins, outs = inreach_sets(n, edges), outreach_sets(n, edges)
    return [len(ins[v] | outs[v]) for v in range(n)]


def sccs_brute(n, edges):
    r = closure(n, edges)
    seen, comps = set(), []
    for v in range(n):
        if v in seen:
            continue
        comp = sorted({v} | {u for u in range(n) if r[u][v] and r[v][u]})
        seen.update(comp)
        comps.append(tuple(comp))
    return sorted(comps)


def threshold_brute(values):
    """Largest j with values[i-1] == i-1 for i <= j and a strict gap after j."""
    n = len(values)
    best = 0
    for j in range(n + 1):
        cond1 = all(values[i - 1] == i - 1 for i in range(1, j + 1))
        cond2 = j in (0, n) or values[j - 1] < values[j]
        if cond1 and cond2:
            best = j
    return best


def true_ranks(n, edges):
    return [len(s) for s in inreach_sets(n, edges)]


def selection_ok(top, n, edges):
    r = true_ranks(n, edges)
    if len(set(top)) != len(top):
        return False
    if any(r[a] > r[b] for a, b in zip(top, top[1:])):
        return False
    rest = [v for v in range(n) if v not in set(top)]
    return not rest or not top or max(r[v] for v in top) <= min(r[v] for v in rest)


def all_tournaments(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield [(u, v) if mask >> i & 1 else (v, u) for i, (u, v) in enumerate(pairs)]


def random_tournament_edges(n, rng):
    return [(u, v) if rng.random() < 0.5 else (v, u) for u, v in itertools.combinations(range(n), 2)]


def random_dag_edges(n, rng, p=0.3):
    perm = list(range(n))
    rng.shuffle(perm)
    return [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


def random_perm(n, seed):
    p = list(range(n))
    random.Random(seed).shuffle(p)
    return p
