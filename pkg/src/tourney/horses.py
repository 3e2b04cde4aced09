"""The 25-horses demo: n=25, k=5, m=3 in batch mode.

Horses are numbered 1..25 by true finishing order (horse 1 is fastest), so
ground truth is the identity order on horse numbers.  Vertex ``i`` carries
horse ``labels[i]``; the default labeling shuffles 1..25 with
``random.Random(42)``, which gives the classic five first-round races.
``labeling="identity"`` uses horse ``i+1`` for vertex ``i`` instead.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import InvalidInput
from .graph import RevealedGraph
from .oracle import PermutationOracle
from .scheduler import RunOptions, RunResult, blitzrank

N, K, M = 25, 5, 3
SHUFFLE_SEED = 42


def horse_labels(labeling: str = "shuffle") -> list[int]:
    labels = list(range(1, N + 1))
    if labeling == "shuffle":
        random.Random(SHUFFLE_SEED).shuffle(labels)
    elif labeling != "identity":
        raise InvalidInput(f"unknown labeling {labeling!r}")
    return labels


@dataclass(frozen=True)
class HorseState:
    horse: int
    L: int
    W: int
    queried: bool
    resolved: bool


@dataclass
class HorsesRun:
    labels: list[int]
    result: RunResult
    # snapshots[r][horse] is the state after round r+1
    snapshots: list[dict[int, HorseState]]

    @property
    def top_horses(self) -> list[int]:
        return [self.labels[v] for v in self.result.top]


def run_horses(labeling: str = "shuffle") -> HorsesRun:
    labels = horse_labels(labeling)
    perm = sorted(range(N), key=labels.__getitem__)
    opts = RunOptions(k=K, m=M, batch=True)
    res = blitzrank(N, PermutationOracle(perm, K), opts)

    g = RevealedGraph(N)
    snaps = []
    for rnd in res.trace.rounds:
        g.add_edges(rnd.new_edges)
        s = g.structure()
        queried = {v for q in rnd.queries for v in q}
        snaps.append({
            labels[v]: HorseState(labels[v], s.in_count[v], s.out_count[v], v in queried,
                                  s.kappa[v] == N - 1)
            for v in range(N)
        })
    return HorsesRun(labels, res, snaps)


def _rows(run: HorsesRun) -> list[list[int]]:
    first = run.result.trace.rounds[0].queries
    rows = [sorted(run.labels[v] for v in q) for q in first]
    return sorted(rows)


def _round_titles(run: HorsesRun) -> list[str]:
    titles = []
    done = 0
    for rnd in run.result.trace.rounds:
        q = len(rnd.queries)
        if q == 1:
            titles.append(f"query {done + 1}")
        else:
            titles.append(f"queries {done + 1}-{done + q} (parallel)")
        done += q
    return titles


def render(run: HorsesRun) -> str:
    """Round-by-round table: ``[h]`` queried, ``(h)`` resolved, L/W per horse."""
    lines = [f"25 horses, k={K}, m={M}, batch mode"]
    rows = _rows(run)
    for r, (title, snap) in enumerate(zip(_round_titles(run), run.snapshots), 1):
        lines.append(f"round {r}: {title}")
        for row in rows:
            cells = []
            for h in row:
                st = snap[h]
                tag = f"{h}"
                if st.resolved:
                    tag = f"({tag})"
                if st.queried:
                    tag = f"[{tag}]"
                cells.append(f"{tag:>7} L={st.L:<2} W={st.W:<2}")
            lines.append("  " + " ".join(cells).rstrip())
    top = ",".join(str(h) for h in run.top_horses)
    lines.append(f"queries={run.result.total_queries} rounds={run.result.rounds} top={top}")
    return "\n".join(lines) + "\n"
