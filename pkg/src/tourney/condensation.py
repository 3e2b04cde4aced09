"""SCC decomposition, condensation DAGs and tiered rankings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

from .errors import InvalidInput
from .graph import RevealedGraph, iter_bits

SecondaryKey = Union[Mapping[int, float], Sequence[float], Callable[[int], float]]


@dataclass(frozen=True)
class SccDecomposition:
    """Components ordered by ascending minimum member; members sorted."""

    components: tuple[tuple[int, ...], ...]
    member_of: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.member_of)

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class CondensationGraph:
    scc: SccDecomposition
    edges: frozenset[tuple[int, int]]
    in_bits: tuple[int, ...]
    out_bits: tuple[int, ...]

    def in_reach(self, c: int) -> frozenset[int]:
        return frozenset(iter_bits(self.in_bits[c]))

    def out_reach(self, c: int) -> frozenset[int]:
        return frozenset(iter_bits(self.out_bits[c]))

    @property
    def in_counts(self) -> tuple[int, ...]:
        return tuple(b.bit_count() for b in self.in_bits)

    @property
    def out_counts(self) -> tuple[int, ...]:
        return tuple(b.bit_count() for b in self.out_bits)

    @property
    def kappa(self) -> tuple[int, ...]:
        return tuple((i | o).bit_count() for i, o in zip(self.in_bits, self.out_bits))

    def as_graph(self) -> RevealedGraph:
        """The condensation as a graph over component indices."""
        g = RevealedGraph(len(self.scc))
        g.add_edges(sorted(self.edges))
        return g


@dataclass(frozen=True)
class TieredRanking:
    tiers: tuple[tuple[int, ...], ...]
    tier_inreach: tuple[int, ...]

    def flatten(self) -> list[int]:
        return [v for tier in self.tiers for v in tier]

    def tier_of(self) -> dict[int, int]:
        return {v: i for i, tier in enumerate(self.tiers) for v in tier}


def scc_decompose(g: RevealedGraph) -> SccDecomposition:
    s = g.structure()
    return SccDecomposition(tuple(s.comps), tuple(s.comp_of))


def condense(g: RevealedGraph) -> CondensationGraph:
    s = g.structure()
    comp_of = s.comp_of
    edges = frozenset(
        (comp_of[u], comp_of[v]) for u, v in g.edges if comp_of[u] != comp_of[v]
    )
    return CondensationGraph(
        SccDecomposition(tuple(s.comps), tuple(comp_of)),
        edges,
        tuple(s.cond_in_bits),
        tuple(s.cond_out_bits),
    )


def refines(fine: SccDecomposition, coarse_graph: RevealedGraph) -> bool:
    """True iff every component of ``fine`` sits inside one SCC of ``coarse_graph``."""
    if fine.n != coarse_graph.n:
        raise InvalidInput(f"universe mismatch: {fine.n} vs {coarse_graph.n}")
    coarse = coarse_graph.structure().comp_of
    return all(len({coarse[v] for v in comp}) == 1 for comp in fine.components)


def projection(fine: SccDecomposition, coarse: SccDecomposition) -> list[int]:
    """Map each fine component to the coarse component containing it."""
    if fine.n != coarse.n:
        raise InvalidInput(f"universe mismatch: {fine.n} vs {coarse.n}")
    phi = []
    for comp in fine.components:
        targets = {coarse.member_of[v] for v in comp}
        if len(targets) != 1:
            raise InvalidInput(f"component {comp} is split by the coarse decomposition")
        phi.append(targets.pop())
    return phi


def kappa_lift_check(g: RevealedGraph) -> bool:
    """Check that resolution agrees between ``g`` and its condensation.

    The condensation-side counts are recomputed from the condensation's own
    edges, so this cross-checks the component bookkeeping.
    """
    cond = condense(g)
    cg = cond.as_graph().structure()
    n_prime = len(cond.scc)
    vertex_kappa = g.structure().kappa
    for c, members in enumerate(cond.scc.components):
        lifted = cg.kappa[c] == n_prime - 1
        flags = [vertex_kappa[v] == g.n - 1 for v in members]
        if not (lifted == all(flags) == any(flags)):
            return False
    return True


def _score_fn(secondary_key: Optional[SecondaryKey]) -> Optional[Callable[[int], float]]:
    if secondary_key is None:
        return None
    if callable(secondary_key):
        return secondary_key
    return secondary_key.__getitem__


def order_within_tier(members, secondary_key: Optional[SecondaryKey] = None) -> tuple[int, ...]:
    """Descending secondary score, ascending id on equal or missing scores."""
    score = _score_fn(secondary_key)
    if score is None:
        return tuple(sorted(members))
    return tuple(sorted(members, key=lambda v: (-score(v), v)))


def tiered_ranking(g: RevealedGraph, secondary_key: Optional[SecondaryKey] = None) -> TieredRanking:
    s = g.structure()
    order = sorted(range(len(s.comps)), key=lambda c: (s.cond_in_count[c], c))
    tiers = tuple(order_within_tier(s.comps[c], secondary_key) for c in order)
    return TieredRanking(tiers, tuple(s.cond_in_count[c] for c in order))
