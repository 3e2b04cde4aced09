"""Revealed graphs, reachability and the finalization engine.

Vertex sets are Python ints used as bitsets: bit ``v`` set means vertex ``v``
is a member.  Reachability is recomputed from scratch on demand (one Tarjan
pass plus a bitset sweep over the condensation) and cached until the next
edge insertion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence, Union

from .errors import ContradictoryEdge, FormatError, InvalidEdge, InvalidSize, InvalidTournament

log = logging.getLogger(__name__)

Edge = tuple[int, int]
TieBreak = Union[str, Callable[[int], object]]


def iter_bits(x: int) -> Iterator[int]:
    """Yield the positions of set bits in ascending order."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def bits_of(vertices: Iterable[int]) -> int:
    b = 0
    for v in vertices:
        b |= 1 << v
    return b


# --------------------------------------------------------------------------
# ground truth


class Tournament:
    """A complete orientation on ``n`` vertices.

    ``wins[u]`` is the bitset of vertices that ``u`` beats.
    """

    __slots__ = ("n", "wins")

    def __init__(self, n: int, wins: Sequence[int]):
        if n < 1:
            raise InvalidSize(f"tournament needs n >= 1, got {n}")
        if len(wins) != n:
            raise InvalidTournament(f"expected {n} rows, got {len(wins)}")
        full = (1 << n) - 1
        for u, row in enumerate(wins):
            if row & ~full or row >> u & 1:
                raise InvalidTournament(f"row {u} has out-of-range or self edges")
        for u in range(n):
            for v in range(u + 1, n):
                a = wins[u] >> v & 1
                b = wins[v] >> u & 1
                if a == b:
                    state = "both directions" if a else "no direction"
                    raise InvalidTournament(f"pair ({u}, {v}) has {state}")
        self.n = n
        self.wins = tuple(wins)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "Tournament":
        wins = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise InvalidTournament(f"bad edge ({u}, {v})")
            wins[u] |= 1 << v
        return cls(n, wins)

    @classmethod
    def from_permutation(cls, perm: Sequence[int]) -> "Tournament":
        """Transitive tournament where earlier entries of ``perm`` win."""
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise InvalidTournament("not a permutation of range(n)")
        wins = [0] * n
        below = 0
        for v in reversed(perm):
            wins[v] = below
            below |= 1 << v
        return cls(n, wins)

    def beats(self, u: int, v: int) -> bool:
        return bool(self.wins[u] >> v & 1)

    def edges(self) -> Iterator[Edge]:
        for u in range(self.n):
            for v in iter_bits(self.wins[u]):
                yield (u, v)

    def induced(self, items: Iterable[int]) -> frozenset[Edge]:
        items = list(items)
        mask = bits_of(items)
        return frozenset((u, v) for u in items for v in iter_bits(self.wins[u] & mask))

    def is_transitive(self) -> bool:
        # transitive iff out-degrees are exactly 0..n-1
        return sorted(w.bit_count() for w in self.wins) == list(range(self.n))

    def __eq__(self, other):
        return isinstance(other, Tournament) and self.wins == other.wins

    def __hash__(self):
        return hash(self.wins)

    def __repr__(self):
        return f"Tournament(n={self.n})"


def random_tournament(n: int, rng) -> Tournament:
    """Uniform random orientation; ``rng`` is a ``random.Random``-like object."""
    wins = [0] * n
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.5:
                wins[u] |= 1 << v
            else:
                wins[v] |= 1 << u
    return Tournament(n, wins)


def planted_tiers(sizes: Sequence[int], rng) -> Tournament:
    """Tournament whose SCC tiers have the given sizes, best tier first.

    Every tier is a random strongly connected tournament (rejection sampled),
    and every inter-tier edge points down-tier.  Vertex ids are shuffled so
    tiers are not contiguous id ranges.  A tier of size 2 cannot be strongly
    connected, so sizes must be 1 or at least 3.
    """
    if any(s < 1 or s == 2 for s in sizes):
        raise InvalidTournament("tier sizes must be 1 or >= 3")
    n = sum(sizes)
    labels = list(range(n))
    rng.shuffle(labels)
    wins = [0] * n
    start = 0
    for s in sizes:
        tier = labels[start:start + s]
        while True:
            local = random_tournament(s, rng) if s > 1 else Tournament(1, [0])
            g = RevealedGraph(s)
            g.add_edges(local.edges())
            if s == 1 or len(g.structure().comps) == 1:
                break
        for a, b in local.edges():
            wins[tier[a]] |= 1 << tier[b]
        below = bits_of(labels[start + s:])
        for v in tier:
            wins[v] |= below
        start += s
    return Tournament(n, wins)


# --------------------------------------------------------------------------
# text format


def parse_tournament(text: str) -> Tournament:
    n = None
    edges: list[Edge] = []
    perm = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            nums = [int(x) for x in rest]
        except ValueError:
            raise FormatError(f"non-integer field in {raw!r}", lineno) from None
        if head == "n":
            if n is not None or len(nums) != 1:
                raise FormatError("expected a single 'n <count>' line", lineno)
            n = nums[0]
            if n < 1:
                raise FormatError("n must be >= 1", lineno)
        elif n is None:
            raise FormatError("first line must be 'n <count>'", lineno)
        elif head == "e":
            if perm is not None:
                raise FormatError("'e' lines cannot be mixed with 'perm'", lineno)
            if len(nums) != 2:
                raise FormatError("expected 'e <winner> <loser>'", lineno)
            edges.append((nums[0], nums[1]))
        elif head == "perm":
            if perm is not None or edges:
                raise FormatError("only one 'perm' line and no 'e' lines allowed", lineno)
            perm = nums
        else:
            raise FormatError(f"unknown directive {head!r}", lineno)
    if n is None:
        raise FormatError("missing 'n <count>' line")
    try:
        if perm is not None:
            if len(perm) != n:
                raise FormatError(f"perm lists {len(perm)} vertices, expected {n}")
            return Tournament.from_permutation(perm)
        return Tournament.from_edges(n, edges)
    except InvalidTournament as exc:
        raise FormatError(str(exc)) from None


def read_tournament(path) -> Tournament:
    return parse_tournament(Path(path).read_text(encoding="utf-8"))


def format_tournament(t: Tournament, as_perm: bool | None = None) -> str:
    """Render ``t``; transitive tournaments default to the ``perm`` form."""
    if as_perm is None:
        as_perm = t.is_transitive()
    lines = [f"n {t.n}"]
    if as_perm:
        if not t.is_transitive():
            raise InvalidTournament("only transitive tournaments have a perm form")
        order = sorted(range(t.n), key=lambda v: -t.wins[v].bit_count())
        lines.append("perm " + " ".join(map(str, order)))
    else:
        lines.extend(f"e {u} {v}" for u, v in t.edges())
    return "\n".join(lines) + "\n"


def write_tournament(t: Tournament, path, as_perm: bool | None = None) -> None:
    Path(path).write_text(format_tournament(t, as_perm), encoding="utf-8")


# --------------------------------------------------------------------------
# revealed graph


class RevealedGraph:
    """Accumulated oracle answers over vertices ``0..n-1``.

    ``edges`` holds every accepted ordered pair.  Only edges that were not
    already implied by reachability are kept in the adjacency used for closure
    computations; dropping implied edges never changes reachability.
    """

    def __init__(self, n: int):
        if n < 1:
            raise InvalidSize(f"graph needs n >= 1, got {n}")
        self.n = n
        self.edges: set[Edge] = set()
        self.round = 0
        self.conflicts: list[Edge] = []
        self._succ: list[list[int]] = [[] for _ in range(n)]
        self._struct: GraphStructure | None = None
        self._reach_hint: list[int] | None = None

    def copy(self) -> "RevealedGraph":
        g = RevealedGraph(self.n)
        g.edges = set(self.edges)
        g.round = self.round
        g.conflicts = list(self.conflicts)
        g._succ = [list(s) for s in self._succ]
        g._struct = self._struct
        g._reach_hint = self._reach_hint
        return g

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def add_edges(self, batch: Iterable[Edge], on_conflict: str = "error") -> int:
        """Insert ``batch``; return the number of edges that were new.

        ``on_conflict`` is ``"error"`` (raise :class:`ContradictoryEdge`) or
        ``"keep_first"`` (keep the earlier direction and log the conflict).
        Edges preceding a raised conflict stay inserted.
        """
        return len(self.insert(batch, on_conflict))

    def insert(self, batch: Iterable[Edge], on_conflict: str = "error") -> list[Edge]:
        """Like :meth:`add_edges` but return the inserted edges in order."""
        if on_conflict not in ("error", "keep_first"):
            raise ValueError(f"unknown conflict policy {on_conflict!r}")
        n = self.n
        hint = self._reach_hint
        added: list[Edge] = []
        for u, v in batch:
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidEdge(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise InvalidEdge(f"self edge ({u}, {u})")
            if (u, v) in self.edges:
                continue
            if (v, u) in self.edges:
                if on_conflict == "error":
                    raise ContradictoryEdge(u, v)
                log.warning("keeping (%d, %d); dropping contradictory (%d, %d)", v, u, u, v)
                self.conflicts.append((u, v))
                continue
            self.edges.add((u, v))
            added.append((u, v))
            if hint is None or not hint[u] >> v & 1:
                self._succ[u].append(v)
        if added:
            self._struct = None
        return added

    def structure(self) -> "GraphStructure":
        if self._struct is None:
            self._struct = GraphStructure(self.n, self._succ)
            self._reach_hint = self._struct.vertex_out_bits()
        return self._struct

    def __repr__(self):
        return f"RevealedGraph(n={self.n}, edges={len(self.edges)}, round={self.round})"


def new_revealed(n: int) -> RevealedGraph:
    return RevealedGraph(n)


def add_edges(g: RevealedGraph, batch: Iterable[Edge], on_conflict: str = "error") -> int:
    return g.add_edges(batch, on_conflict)


def _tarjan(n: int, succ: Sequence[Sequence[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out sinks first."""
    index = [-1] * n
    low = [0] * n
    onstack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        if not succ[root]:
            # fast path for isolated sources and sinks
            index[root] = counter
            counter += 1
            comps.append([root])
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack[root] = True
        work = [(root, iter(succ[root]))]
        while work:
            v, it = work[-1]
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack[w] = True
                    work.append((w, iter(succ[w])))
                    break
                if onstack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        onstack[w] = False
                        comp.append(w)
                        if w == v:
                            break
                    comps.append(comp)
    return comps


class GraphStructure:
    """SCCs and reachability of a directed graph, computed once.

    Components are numbered canonically by ascending minimum member.  For a
    component ``c``: ``comp_in[c]``/``comp_out[c]`` are vertex bitsets of all
    vertices in strictly earlier/later components that reach/are reached.
    ``cond_in_count``/``cond_out_count`` count components instead of vertices.
    """

    def __init__(self, n: int, succ: Sequence[Sequence[int]]):
        self.n = n
        emitted = _tarjan(n, succ)
        if len(emitted) == n:
            # acyclic: component v is vertex v
            comps = [(v,) for v in range(n)]
            comp_of = list(range(n))
            comp_bits = [1 << v for v in range(n)]
            topo_rev = [c[0] for c in emitted]
        else:
            order = sorted(range(len(emitted)), key=lambda i: min(emitted[i]))
            rank = [0] * len(emitted)
            for new, old in enumerate(order):
                rank[old] = new
            comps = [tuple(sorted(emitted[old])) for old in order]
            comp_of = [0] * n
            for c, members in enumerate(comps):
                for v in members:
                    comp_of[v] = c
            comp_bits = [bits_of(m) for m in comps]
            # emission order is reverse topological: successors come first
            topo_rev = [rank[i] for i in range(len(emitted))]
        k = len(comps)
        out_v = [0] * k
        out_c = [0] * k
        singletons = k == n
        csucc: list[set[int]] = [set() for _ in range(k)]
        for c in topo_rev:
            acc_v = 0
            acc_c = 0
            ds = csucc[c]
            if singletons:
                ds.update(succ[c])
            else:
                for x in comps[c]:
                    for y in succ[x]:
                        d = comp_of[y]
                        if d != c:
                            ds.add(d)
            for d in ds:
                acc_v |= comp_bits[d] | out_v[d]
                if not singletons:
                    acc_c |= (1 << d) | out_c[d]
            out_v[c] = acc_v
            out_c[c] = acc_c
        in_v = [0] * k
        in_c = [0] * k
        for c in reversed(topo_rev):
            iv = in_v[c] | comp_bits[c]
            ic = in_c[c] | (1 << c)
            for d in csucc[c]:
                in_v[d] |= iv
                if not singletons:
                    in_c[d] |= ic
        self.comps = comps
        self.comp_of = comp_of
        self.comp_bits = comp_bits
        self.comp_in = in_v
        self.comp_out = out_v
        self.cond_succ = [frozenset(s) for s in csucc]
        if singletons:
            self.cond_in_count = [b.bit_count() for b in in_v]
            self.cond_out_count = [b.bit_count() for b in out_v]
        else:
            self.cond_in_count = [b.bit_count() for b in in_c]
            self.cond_out_count = [b.bit_count() for b in out_c]
        # with all-singleton components, component c is vertex c
        self.cond_in_bits = in_v if singletons else in_c
        self.cond_out_bits = out_v if singletons else out_c
        if singletons:
            self.in_count = self.cond_in_count
            self.out_count = self.cond_out_count
            self.kappa = [(a | b).bit_count() for a, b in zip(in_v, out_v)]
            return
        sizes = [len(m) for m in comps]
        self.in_count = [in_v[comp_of[v]].bit_count() + sizes[comp_of[v]] - 1 for v in range(n)]
        self.out_count = [out_v[comp_of[v]].bit_count() + sizes[comp_of[v]] - 1 for v in range(n)]
        comp_kappa = [(in_v[c] | out_v[c]).bit_count() for c in range(k)]
        self.kappa = [comp_kappa[comp_of[v]] + sizes[comp_of[v]] - 1 for v in range(n)]

    def vertex_in_bits(self) -> list[int]:
        return [self.comp_in[c] | (self.comp_bits[c] & ~(1 << v))
                for v, c in enumerate(self.comp_of)]

    def vertex_out_bits(self) -> list[int]:
        return [self.comp_out[c] | (self.comp_bits[c] & ~(1 << v))
                for v, c in enumerate(self.comp_of)]

    def is_acyclic(self) -> bool:
        return len(self.comps) == self.n

    def resolved(self) -> list[bool]:
        target = self.n - 1
        return [kap == target for kap in self.kappa]


# --------------------------------------------------------------------------
# reachability summaries


@dataclass(frozen=True)
class ReachSummary:
    in_bits: tuple[int, ...]
    out_bits: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.in_bits)

    def in_reach(self, v: int) -> frozenset[int]:
        return frozenset(iter_bits(self.in_bits[v]))

    def out_reach(self, v: int) -> frozenset[int]:
        return frozenset(iter_bits(self.out_bits[v]))

    @property
    def in_counts(self) -> tuple[int, ...]:
        return tuple(b.bit_count() for b in self.in_bits)

    @property
    def out_counts(self) -> tuple[int, ...]:
        return tuple(b.bit_count() for b in self.out_bits)

    @property
    def kappa(self) -> tuple[int, ...]:
        return tuple((i | o).bit_count() for i, o in zip(self.in_bits, self.out_bits))


def reach_summary(g: RevealedGraph) -> ReachSummary:
    s = g.structure()
    return ReachSummary(tuple(s.vertex_in_bits()), tuple(s.vertex_out_bits()))


def resolved_set(g: RevealedGraph) -> frozenset[int]:
    s = g.structure()
    return frozenset(v for v, ok in enumerate(s.resolved()) if ok)


# --------------------------------------------------------------------------
# rank spectrum and finalization


@dataclass(frozen=True)
class RankSpectrum:
    values: tuple[int, ...]
    basis: tuple[int, ...]
    tie_break: str


def _tie_key(tie_break: TieBreak):
    if callable(tie_break):
        return tie_break, getattr(tie_break, "__name__", "custom")
    if tie_break == "id":
        return (lambda v: v), "id"
    if tie_break == "id_desc":
        return (lambda v: -v), "id_desc"
    raise ValueError(f"unknown tie-break policy {tie_break!r}")


def spectrum_of(in_counts: Sequence[int], tie_break: TieBreak = "id") -> RankSpectrum:
    key, name = _tie_key(tie_break)
    basis = tuple(sorted(range(len(in_counts)), key=lambda v: (in_counts[v], key(v))))
    return RankSpectrum(tuple(in_counts[v] for v in basis), basis, name)


def rank_spectrum(g: RevealedGraph, tie_break: TieBreak = "id") -> RankSpectrum:
    return spectrum_of(g.structure().in_count, tie_break)


def finalization_threshold(values: Sequence[int]) -> int:
    """Largest ``j`` with ``values[:j] == 0..j-1`` whose boundary is strict."""
    n = len(values)
    prefix = 0
    while prefix < n and values[prefix] == prefix:
        prefix += 1
    for j in range(prefix, -1, -1):
        if j in (0, n) or values[j - 1] < values[j]:
            return j
    return 0  # unreachable: j = 0 always qualifies


@dataclass(frozen=True)
class FinalizationState:
    threshold: int
    top_set: tuple[int, ...]
    cand_set: tuple[int, ...]
    spectrum: RankSpectrum


def finalization_of(spec: RankSpectrum) -> FinalizationState:
    j = finalization_threshold(spec.values)
    return FinalizationState(j, spec.basis[:j], spec.basis[j:], spec)


def finalization(g: RevealedGraph, tie_break: TieBreak = "id") -> FinalizationState:
    """Finalization threshold, TOP and CAND of ``g``.

    Computed verbatim on cyclic graphs too; the structural guarantees about
    TOP only hold for acyclic input.
    """
    return finalization_of(rank_spectrum(g, tie_break))
