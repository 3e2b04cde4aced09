import copy
import random

from tourney.graph import Tournament, random_tournament
from tourney.oracle import MatrixOracle
from tourney.scheduler import RunOptions, blitzrank, general_sort, trace_document, trace_from_document
from tourney.verify import selection_violations, true_inreach, verify_trace

from tests.helpers import all_tournaments, true_ranks


def test_true_inreach_matches_closure():
    rng = random.Random(0)
    for _ in range(30):
        n = rng.randint(1, 12)
        t = random_tournament(n, rng)
        assert true_inreach(t) == true_ranks(n, list(t.edges()))
    for edges in list(all_tournaments(4))[:20]:
        assert true_inreach(Tournament.from_edges(4, edges)) == true_ranks(4, edges)


def test_selection_violations():
    t = Tournament.from_permutation([2, 0, 1, 3])
    assert selection_violations([2, 0], t) == []
    assert any("ordering" in v for v in selection_violations([0, 2], t))
    assert any("dominance" in v for v in selection_violations([2, 1], t))
    assert selection_violations([2, 2], t)
    assert selection_violations([9], t)


def _doc(seed=1, algo=blitzrank):
    t = random_tournament(10, random.Random(seed))
    res = algo(10, MatrixOracle(t, 4), RunOptions(k=4, m=4))
    doc = trace_document(res)
    return t, doc


def test_verify_accepts_real_traces():
    for seed in range(10):
        for algo in (blitzrank, general_sort):
            t, doc = _doc(seed, algo)
            assert verify_trace(doc, trace_from_document(doc), t) == []


def test_verify_rejects_tampering():
    t, doc = _doc(3)

    def check(mutate, needle):
        d = copy.deepcopy(doc)
        mutate(d)
        issues = verify_trace(d, trace_from_document(d), t)
        assert any(needle in msg for msg in issues), issues

    def flip_edge(d):
        u, v = d["rounds"][0]["new_edges"][0]
        d["rounds"][0]["new_edges"][0] = [v, u]

    check(flip_edge, "not in the ground truth")

    def stall(d):
        d["rounds"].append({"queries": [[0, 1]], "new_edges": [], "resolved": 0})

    check(stall, "no new edge")

    def oversize(d):
        d["rounds"][0]["queries"][0] = list(range(6))

    check(oversize, "size outside")

    def unqueried(d):
        d["rounds"][0]["queries"] = [[0, 1]]

    check(unqueried, "not queried")


def test_verify_rejects_wrong_top():
    t = Tournament.from_permutation([4, 2, 0, 1, 3, 5, 6, 7])
    res = blitzrank(8, MatrixOracle(t, 3), RunOptions(k=3, m=3))
    doc = trace_document(res)
    trace = trace_from_document(doc)
    assert verify_trace(doc, trace, t) == []
    rev = dict(doc, top=list(reversed(doc["top"])))
    assert any("ordering" in v for v in verify_trace(rev, trace, t))
    short = dict(doc, top=doc["top"][:2])
    assert any("expected m=3" in v for v in verify_trace(short, trace, t))
    wrong = dict(doc, top=[4, 2, 3], top_inreach=None)
    assert any("not resolved" in v or "dominance" in v for v in verify_trace(wrong, trace, t))
    lied = dict(doc, total_queries=doc["total_queries"] + 1)
    assert any("total_queries" in v for v in verify_trace(lied, trace, t))


def test_verify_size_mismatch():
    t, doc = _doc(4)
    other = random_tournament(9, random.Random(0))
    assert verify_trace(doc, trace_from_document(doc), other)
