"""Query-complexity benchmark on random transitive instances.

One full-sort run per (n, k, seed) yields the whole curve T_1..T_n.
Instances come from ``numpy.random.default_rng([base, n, k, seed])``
(PCG64 seeded through SeedSequence) and ``Generator.permutation``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidInput
from .graph import Tournament, planted_tiers
from .oracle import MatrixOracle, PermutationOracle
from .scheduler import RunOptions, blitzrank, extract_checkpoints

ALGORITHM = "blitzrank-dagger-sequential"
RECORD_HEADER = ("n", "k", "seed", "m", "queries", "bound", "ratio")
SUMMARY_HEADER = ("n", "k", "m", "median", "p10", "p90", "max", "bound")


def conjectured_bound(n: int, k: int, m: int) -> float:
    """ceil((n-1)/(k-1)) + (m-1)/(k-1) * (1 + log_k m)."""
    if n < 2 or k < 2 or not 1 <= m <= n:
        raise InvalidInput(f"bound needs n >= 2, k >= 2, 1 <= m <= n; got n={n}, k={k}, m={m}")
    head = -(-(n - 1) // (k - 1))
    if m == 1:
        return float(head)
    return head + (m - 1) / (k - 1) * (1 + math.log(m) / math.log(k))


def top1_bound(n: int, k: int) -> int:
    return -(-(n - 1) // (k - 1))


@dataclass(frozen=True)
class GridConfig:
    n_values: tuple[int, ...]
    k_values: tuple[int, ...]
    seeds: int = 20
    rng_seed_base: int = 0
    algorithm: str = field(default=ALGORITHM)

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(self.n_values))
        object.__setattr__(self, "k_values", tuple(self.k_values))
        if not self.n_values or any(n < 2 for n in self.n_values):
            raise InvalidInput("every n must be >= 2")
        if not self.k_values or any(k < 2 for k in self.k_values):
            raise InvalidInput("every k must be >= 2")
        if self.seeds < 1:
            raise InvalidInput("seeds must be >= 1")
        if self.algorithm != ALGORITHM:
            raise InvalidInput(f"only {ALGORITHM} is supported")

    def cells(self) -> list[tuple[int, int, int]]:
        return [(n, k, s) for n in self.n_values for k in self.k_values for s in range(self.seeds)]


DESK_GRID = GridConfig((100, 200), (5, 10, 20), 20)
FULL_GRID = GridConfig((100, 200, 400, 800), (5, 10, 20, 50), 20)


@dataclass(frozen=True)
class BenchRecord:
    n: int
    k: int
    seed: int
    T: tuple[int, ...]
    bound: tuple[float, ...]

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(t / b for t, b in zip(self.T, self.bound))

    @property
    def ratio_max(self) -> float:
        return max(self.ratios)


def instance_permutation(base: int, n: int, k: int, seed: int) -> list[int]:
    rng = np.random.default_rng([base, n, k, seed])
    return rng.permutation(n).tolist()


def full_sort_counts(n: int, oracle, k: int) -> list[int]:
    opts = RunOptions(k=k, m=n, tie_break="dagger", checkpoint_all_m=True)
    return extract_checkpoints(blitzrank(n, oracle, opts).trace)


def run_cell(n: int, k: int, seed: int, base: int = 0) -> BenchRecord:
    perm = instance_permutation(base, n, k, seed)
    T = full_sort_counts(n, PermutationOracle(perm, k), k)
    bound = tuple(conjectured_bound(n, k, m) for m in range(1, n + 1))
    return BenchRecord(n, k, seed, tuple(T), bound)


def _run_cell_args(args):
    return run_cell(*args)


def default_threads() -> int:
    env = os.environ.get("TOURNEY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_grid(cfg: GridConfig, threads: Optional[int] = None) -> list[BenchRecord]:
    """Run every cell; output order is by (n, k, seed) whatever the parallelism."""
    jobs = [(n, k, s, cfg.rng_seed_base) for n, k, s in cfg.cells()]
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(jobs) == 1:
        records = [_run_cell_args(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_cell_args, jobs, chunksize=4))
    return sorted(records, key=lambda r: (r.n, r.k, r.seed))


@dataclass(frozen=True)
class SummaryRow:
    n: int
    k: int
    m: int
    median: float
    p10: float
    p90: float
    max: float
    bound: float


def summarize(records: Sequence[BenchRecord]) -> list[SummaryRow]:
    if not records:
        raise InvalidInput("no records to summarize")
    groups: dict[tuple[int, int], list[BenchRecord]] = {}
    for r in records:
        groups.setdefault((r.n, r.k), []).append(r)
    rows = []
    for (n, k), recs in sorted(groups.items()):
        arr = np.array([r.T for r in recs], dtype=float)
        med = np.median(arr, axis=0)
        p10, p90 = np.percentile(arr, [10, 90], axis=0)
        mx = arr.max(axis=0)
        for m in range(1, n + 1):
            i = m - 1
            rows.append(SummaryRow(n, k, m, float(med[i]), float(p10[i]), float(p90[i]),
                                   float(mx[i]), conjectured_bound(n, k, m)))
    return rows


def _open_csv(stream):
    return csv.writer(stream, lineterminator="\n")


def write_records_csv(records: Iterable[BenchRecord], stream) -> None:
    w = _open_csv(stream)
    w.writerow(RECORD_HEADER)
    for r in records:
        for m, (t, b) in enumerate(zip(r.T, r.bound), 1):
            w.writerow((r.n, r.k, r.seed, m, t, f"{b:.6f}", f"{t / b:.6f}"))


def write_summary_csv(rows: Iterable[SummaryRow], stream) -> None:
    w = _open_csv(stream)
    w.writerow(SUMMARY_HEADER)
    for s in rows:
        w.writerow((s.n, s.k, s.m, f"{s.median:.6f}", f"{s.p10:.6f}", f"{s.p90:.6f}",
                    f"{s.max:.6f}", f"{s.bound:.6f}"))


def records_csv(records) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()


@dataclass
class RatioReport:
    worst: float
    soft: list[tuple[int, int, int, int, float]]
    hard: list[tuple[int, int, int, int, float]]

    @property
    def ok(self) -> bool:
        return not self.hard


def check_ratios(records: Iterable[BenchRecord], soft: float = 1.25, hard: float = 1.5) -> RatioReport:
    """Collect (n, k, seed, m, ratio) entries above the soft and hard ceilings."""
    worst = 0.0
    soft_hits, hard_hits = [], []
    for r in records:
        for m, ratio in enumerate(r.ratios, 1):
            worst = max(worst, ratio)
            if ratio > soft:
                soft_hits.append((r.n, r.k, r.seed, m, ratio))
            if ratio > hard:
                hard_hits.append((r.n, r.k, r.seed, m, ratio))
    return RatioReport(worst, soft_hits, hard_hits)


# --------------------------------------------------------------------------
# cycles-versus-transitive diagnostic


def random_tier_sizes(n: int, rng: random.Random, max_tier: int = 6) -> list[int]:
    sizes = []
    left = n
    while left:
        choices = [s for s in [1] + list(range(3, max_tier + 1)) if s <= left and left - s != 2]
        s = rng.choice(choices)
        sizes.append(s)
        left -= s
    return sizes


def shadow_transitive(t: Tournament) -> Tournament:
    """Transitive tournament with the same SCC tiers, intra-tier order by id."""
    from .graph import RevealedGraph
    from .condensation import tiered_ranking

    g = RevealedGraph(t.n)
    g.add_edges(t.edges())
    order = tiered_ranking(g).flatten()
    return Tournament.from_permutation(order)


@dataclass(frozen=True)
class PlantedComparison:
    seed: int
    m: int
    planted_queries: int
    shadow_queries: int
    tier_gap: int

    @property
    def excess(self) -> int:
        return self.planted_queries - self.shadow_queries - self.tier_gap


def planted_comparison(n: int, k: int, m: int, seeds: int, base: int = 0) -> list[PlantedComparison]:
    """Compare planted-SCC instances with their transitive shadows.

    ``tier_gap`` is n minus the number of tiers.  A positive ``excess`` is a
    counterexample to the soft expectation that cycles do not make selection
    harder; it is reported, never raised.
    """
    out = []
    for seed in range(seeds):
        rng = random.Random(hash((base, n, k, seed)) & 0xFFFFFFFF)
        sizes = random_tier_sizes(n, rng)
        t = planted_tiers(sizes, rng)
        shadow = shadow_transitive(t)
        opts = RunOptions(k=k, m=m, tie_break="dagger")
        q_planted = blitzrank(n, MatrixOracle(t, k), opts).total_queries
        q_shadow = blitzrank(n, MatrixOracle(shadow, k), opts).total_queries
        out.append(PlantedComparison(seed, m, q_planted, q_shadow, n - len(sizes)))
    return out
