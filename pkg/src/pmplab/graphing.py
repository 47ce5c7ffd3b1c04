"""Bicolored Schreier graphings on finite atom spaces.

Edges are ordered atom pairs, closed under swap.  The word set is closed
under inverses before building so the edge relation is symmetric; an edge
``(x, y)`` is colored by the set of words sending ``x`` to ``y``.  Vertices
are colored by the indices of the parameter events containing them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Iterable, Sequence

from .action import Action, Word, evaluate_word
from .canonical import ColoredGraph
from .errors import DomainMismatchError, InvalidInputError, InvariantViolation, ResourceError
from .measure import Event

EXHAUSTIVE_MAX_ATOMS = 12
AUTO_EXHAUSTIVE_MAX_EDGES = 14


def symmetrize(words: Iterable[Word]) -> tuple:
    out = set()
    for w in words:
        if w.letters:
            out.add(w)
            out.add(w.inverse())
    return tuple(sorted(out, key=lambda w: (len(w), w.letters)))


@dataclass(frozen=True, eq=False)
class Graphing:
    action: Action
    words: tuple
    params: tuple
    edges: dict = field(repr=False)
    vertex_colors: tuple = field(repr=False)
    degree: int = 0

    @property
    def space(self):
        return self.action.space

    def neighbors(self, x: int) -> list:
        return self._adj[x]

    def __post_init__(self):
        adj = {x: [] for x in self.space.atoms}
        for (x, y) in self.edges:
            adj[x].append(y)
        for x in adj:
            adj[x].sort()
        object.__setattr__(self, "_adj", adj)

    def edge_set(self, pairs: Iterable, close: bool = True) -> "EdgeSet":
        pairs = set(tuple(p) for p in pairs)
        if close:
            pairs |= {(y, x) for x, y in pairs}
        return EdgeSet(self, frozenset(pairs))

    def all_edges(self) -> "EdgeSet":
        return EdgeSet(self, frozenset(self.edges))

    def undirected_edges(self) -> list:
        return sorted((x, y) for (x, y) in self.edges if x < y)

    def word_names(self) -> list:
        return [w.format(self.action.names) for w in self.words]


@dataclass(frozen=True)
class EdgeSet:
    graphing: Graphing = field(repr=False)
    pairs: frozenset

    def __post_init__(self):
        for (x, y) in self.pairs:
            if (x, y) not in self.graphing.edges:
                raise InvalidInputError(f"({x},{y}) is not an edge of the graphing")
            if (y, x) not in self.pairs:
                raise InvalidInputError(f"edge set is not symmetric at ({x},{y})")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))


def build_schreier(action: Action, words: Iterable[Word], params: Sequence[Event] = ()) -> Graphing:
    """Schreier graphing of the action relative to the (symmetrized) word set."""
    S = symmetrize(words)
    params = tuple(params)
    for e in params:
        if e.space != action.space:
            raise DomainMismatchError("parameter event is not on the action's space")
    colors = {}
    for s in S:
        p = evaluate_word(action, s)
        for x, y in enumerate(p):
            if x != y:
                colors.setdefault((x, y), []).append(s.letters)
    edges = {e: tuple(sorted(c)) for e, c in colors.items()}
    vcol = tuple(tuple(i + 1 for i, e in enumerate(params) if x in e.atoms) for x in action.space.atoms)
    out_deg = {}
    for (x, _y) in edges:
        out_deg[x] = out_deg.get(x, 0) + 1
    degree = max(out_deg.values(), default=0)
    w = action.space.weights
    for orb in action.orbits():
        if len({w[x] for x in orb}) != 1:
            raise InvariantViolation("atoms of one orbit carry different weights")
    g = Graphing(action, S, params, edges, vcol, degree)
    for (x, y) in edges:
        if (y, x) not in edges:
            raise InvariantViolation(f"edge relation is not symmetric at ({x},{y})")
    return g


def edge_measure(g: Graphing, Z: EdgeSet) -> tuple:
    """(mu_E, mu_l, mu_r): source-weighted and target-weighted edge masses."""
    if Z.graphing is not g:
        raise DomainMismatchError("edge set belongs to another graphing")
    w = g.space.weights
    mu_l = sum((w[x] for x, _ in Z.pairs), Fraction(0))
    mu_r = sum((w[y] for _, y in Z.pairs), Fraction(0))
    if mu_l != mu_r:
        raise InvariantViolation(f"left measure {mu_l} differs from right measure {mu_r}")
    return mu_l, mu_l, mu_r


def incident_vertices(g: Graphing, Z: EdgeSet) -> Event:
    V = Event(g.space, frozenset(x for x, _ in Z.pairs) | frozenset(y for _, y in Z.pairs))
    mu_e = edge_measure(g, Z)[0]
    mv = V.measure
    if not (mv / 2 <= mu_e <= g.degree * mv):
        raise InvariantViolation(f"sandwich fails: {mv / 2} <= {mu_e} <= {g.degree * mv}")
    return V


def components(g: Graphing, Z: EdgeSet = None) -> list:
    """Connected components of the graphing minus Z, each sorted, ordered by minimum."""
    cut = Z.pairs if Z is not None else frozenset()
    n = len(g.space)
    seen = [False] * n
    out = []
    for r in range(n):
        if seen[r]:
            continue
        seen[r] = True
        comp, stack = [r], [r]
        while stack:
            x = stack.pop()
            for y in g.neighbors(x):
                if not seen[y] and (x, y) not in cut:
                    seen[y] = True
                    comp.append(y)
                    stack.append(y)
        out.append(tuple(sorted(comp)))
    return out


def induced_component(g: Graphing, comp: Sequence[int], Z: EdgeSet = None, extra_colors=None) -> ColoredGraph:
    """The component as a colored graph; ``extra_colors[x]`` is appended to vertex colors."""
    cut = Z.pairs if Z is not None else frozenset()
    members = set(comp)
    edges = tuple((x, y, g.edges[(x, y)]) for x in comp for y in g.neighbors(x)
                  if y in members and (x, y) not in cut)
    vcols = tuple((g.vertex_colors[x],) + ((extra_colors[x],) if extra_colors is not None else ())
                  for x in comp)
    return ColoredGraph(tuple(comp), vcols, edges)


@dataclass(frozen=True)
class DecompositionCertificate:
    Z: EdgeSet
    M: int
    mu_E: Fraction
    components: tuple
    strategy: str

    def revalidate(self, g: Graphing) -> bool:
        comps = tuple(components(g, self.Z))
        return (comps == self.components and all(len(c) <= self.M for c in comps)
                and edge_measure(g, self.Z)[0] == self.mu_E)


def _undirected_adjacency(g: Graphing, comp: Sequence[int], cut: set) -> dict:
    members = set(comp)
    adj = {x: set() for x in comp}
    for x in comp:
        for y in g.neighbors(x):
            if y in members and (x, y) not in cut:
                adj[x].add(y)
    return adj


def _bfs_order(adj: dict, start: int) -> list:
    order, seen = [start], {start}
    q = deque([start])
    while q:
        x = q.popleft()
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                order.append(y)
                q.append(y)
    return order


def _greedy_cut(g: Graphing, comp: Sequence[int], M: int) -> set:
    """Carve BFS balls of at most M atoms from a peripheral atom, cutting their boundary."""
    cut = set()
    pending = [tuple(comp)]
    while pending:
        c = pending.pop()
        if len(c) <= M:
            continue
        adj = _undirected_adjacency(g, c, cut)
        far = _bfs_order(adj, min(c))[-1]
        region = set(_bfs_order(adj, far)[:M])
        for x in region:
            for y in adj[x]:
                if y not in region:
                    cut.add((x, y))
                    cut.add((y, x))
        rest = [x for x in c if x not in region]
        adj_rest = _undirected_adjacency(g, rest, cut)
        seen = set()
        for r in rest:
            if r in seen:
                continue
            part = _bfs_order(adj_rest, r)
            seen.update(part)
            pending.append(tuple(sorted(part)))
    return cut


def _path_dp(costs: Sequence[Fraction], M: int) -> tuple:
    """Cheapest cut set on a path of len(costs)+1 vertices with segments of at most M vertices.

    Returns (cost, indices of cut edges).
    """
    L = len(costs) + 1
    best = [None] * (L + 1)
    back = [0] * (L + 1)
    best[0] = 0
    for j in range(1, L + 1):
        for seg in range(1, min(M, j) + 1):
            prev = best[j - seg]
            if prev is None:
                continue
            val = prev + (costs[j - 1] if j < L else 0)
            if best[j] is None or val < best[j]:
                best[j], back[j] = val, seg
    cuts = []
    j = L
    while j > 0:
        j -= back[j]
        if j > 0:
            cuts.append(j - 1)
    return best[L], sorted(cuts)


def _ring_dp(costs: Sequence[int], M: int) -> tuple:
    """Cheapest cut on a ring where edge i joins vertex i to vertex i+1 (mod n)."""
    n = len(costs)
    best = None
    # some edge among the first M is cut; fix it and solve the remaining path
    for first in range(min(M, n)):
        order = list(range(first + 1, n)) + list(range(first + 1))
        val, cuts = _path_dp([costs[i] for i in order[:-1]], M)
        val += costs[order[-1]]
        if best is None or val < best[0]:
            best = (val, sorted([order[-1]] + [order[i] for i in cuts]))
    return best


def _walk(adj: dict, comp: Sequence[int]) -> tuple:
    """Vertex sequence of a path or cycle component, and whether it is a cycle."""
    ends = sorted(x for x in comp if len(adj[x]) <= 1)
    start = ends[0] if ends else min(comp)
    seq, prev, cur = [start], None, start
    while len(seq) < len(comp):
        prev, cur = cur, min(y for y in adj[cur] if y != prev)
        seq.append(cur)
    return seq, not ends


def _scaled(values: Sequence[Fraction]) -> list:
    den = lcm(*(v.denominator for v in values)) if values else 1
    return [int(v * den) for v in values]


def cycle_dp_cut(g: Graphing, comp: Sequence[int], M: int) -> set:
    """Optimal cut for a component whose undirected structure is a path or a cycle."""
    adj = _undirected_adjacency(g, comp, set())
    if any(len(v) > 2 for v in adj.values()):
        raise InvalidInputError("component is not a path or a cycle")
    if len(comp) <= M:
        return set()
    w = g.space.weights
    seq, is_cycle = _walk(adj, comp)
    n = len(seq)
    if len({w[x] for x in seq}) == 1:
        # equal weights: any cut with the fewest edges is optimal, so cut every M-th edge
        last = n if is_cycle else n - 1
        pairs = [(seq[i], seq[(i + 1) % n]) for i in range(M - 1, last, M)]
        if is_cycle and n % M:
            pairs.append((seq[-1], seq[0]))
    elif not is_cycle:
        costs = _scaled([w[seq[i]] + w[seq[i + 1]] for i in range(n - 1)])
        _, cuts = _path_dp(costs, M)
        pairs = [(seq[i], seq[i + 1]) for i in cuts]
    else:
        ring = [(seq[i], seq[(i + 1) % n]) for i in range(n)]
        _, cuts = _ring_dp(_scaled([w[x] + w[y] for x, y in ring]), M)
        pairs = [ring[i] for i in cuts]
    cut = set()
    for x, y in pairs:
        cut.add((x, y))
        cut.add((y, x))
    return cut


def exhaustive_cut(g: Graphing, comp: Sequence[int], M: int) -> set:
    """Optimal cut by search over undirected edge subsets in order of increasing size."""
    if len(comp) > EXHAUSTIVE_MAX_ATOMS:
        raise ResourceError(f"exhaustive search is capped at {EXHAUSTIVE_MAX_ATOMS} atoms",
                            required=len(comp), cap=EXHAUSTIVE_MAX_ATOMS)
    if len(comp) <= M:
        return set()
    w = g.space.weights
    if len({w[x] for x in comp}) != 1:
        raise InvariantViolation("atoms of one component carry different weights")
    adj = _undirected_adjacency(g, comp, set())
    und = sorted({(min(x, y), max(x, y)) for x in comp for y in adj[x]})
    local = {x: i for i, x in enumerate(comp)}
    n = len(comp)
    base = [0] * n
    for x, y in und:
        base[local[x]] |= 1 << local[y]
        base[local[y]] |= 1 << local[x]

    def small_parts(masks):
        left = (1 << n) - 1
        while left:
            part = frontier = left & -left
            while frontier:
                grow = 0
                f = frontier
                while f:
                    low = f & -f
                    grow |= masks[low.bit_length() - 1]
                    f ^= low
                frontier = grow & ~part
                part |= frontier
            if bin(part).count("1") > M:
                return False
            left &= ~part
        return True

    # removing one edge adds at most one component
    lower = max(1, -(-n // M) - 1)
    for size in range(lower, len(und) + 1):
        for chosen in combinations(und, size):
            masks = base[:]
            for x, y in chosen:
                i, j = local[x], local[y]
                masks[i] &= ~(1 << j)
                masks[j] &= ~(1 << i)
            if small_parts(masks):
                return set(chosen) | {(y, x) for x, y in chosen}
    raise InvariantViolation("no admissible cut found")


def hyperfinite_decomposition(g: Graphing, M: int, strategy: str = "greedy") -> DecompositionCertificate:
    """Edge set Z such that every component of the graphing minus Z has at most M atoms.

    ``exact`` minimizes mu_E(Z) component by component (cycle DP for paths and
    cycles, exhaustive search up to 12 atoms); ``greedy`` is always available;
    ``auto`` uses the exact method where it applies and is cheap (paths,
    cycles, and small components with few edges) and greedy elsewhere.
    """
    if M < 1:
        raise InvalidInputError("component bound M must be at least 1")
    if strategy not in ("greedy", "exact", "auto"):
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    cut = set()
    for comp in components(g):
        if len(comp) <= M:
            continue
        if strategy == "greedy":
            cut |= _greedy_cut(g, comp, M)
            continue
        adj = _undirected_adjacency(g, comp, set())
        if all(len(v) <= 2 for v in adj.values()):
            cut |= cycle_dp_cut(g, comp, M)
        elif len(comp) <= EXHAUSTIVE_MAX_ATOMS and (
                strategy == "exact" or sum(map(len, adj.values())) // 2 <= AUTO_EXHAUSTIVE_MAX_EDGES):
            cut |= exhaustive_cut(g, comp, M)
        elif strategy == "auto":
            cut |= _greedy_cut(g, comp, M)
        else:
            raise ResourceError(f"exact decomposition of a {len(comp)}-atom component is not supported",
                                required=len(comp), cap=EXHAUSTIVE_MAX_ATOMS)
    Z = EdgeSet(g, frozenset(cut))
    comps = tuple(components(g, Z))
    if any(len(c) > M for c in comps):
        raise InvariantViolation("decomposition left an oversized component")
    return DecompositionCertificate(Z, M, edge_measure(g, Z)[0], comps, strategy)
