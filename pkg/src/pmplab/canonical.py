"""Canonical forms for rooted Schreier graphs and small colored graphs.

Rooted Schreier graphs of a group action are complete and deterministic, so
a breadth-first first-visit numbering from the root is already canonical.

Components of a graphing after edge removal are handled by a generic
individualization-refinement search.  The canonical encoding of a graph is
the lexicographically least leaf encoding of that search; encodings are
plain tuples of ints so they compare and serialize stably::

    (n, vertex_colors, edges)
    vertex_colors = tuple of per-vertex color tuples in canonical order
    edges         = sorted tuple of (i, j, color) with color a tuple

``encode`` renders the same data as compact JSON; this byte format is part
of the public interface within a major version.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .action import Action, Word
from .errors import InvalidInputError, PreconditionError, ResourceError


@dataclass(frozen=True, order=True)
class RootedSchreierClass:
    n: int
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        while rows and rows[-1] == tuple(range(self.n)):
            rows = rows[:-1]
        object.__setattr__(self, "rows", rows)
        for r in rows:
            if sorted(r) != list(range(self.n)):
                raise InvalidInputError("table row is not a permutation")

    def step(self, s: int, v: int) -> int:
        i = abs(s)
        if i > len(self.rows):
            return v
        row = self.rows[i - 1]
        if s > 0:
            return row[v]
        return row.index(v)

    def trace(self, w: Word, start: int = 0) -> int:
        v = start
        for s in reversed(w.letters):
            v = self.step(s, v)
        return v

    def fixes(self, w: Word) -> bool:
        """Whether w lies in the stabilizer represented by this table."""
        return self.trace(w) == 0

    def as_action(self) -> Action:
        from .measure import AtomSpace

        return Action(AtomSpace.uniform(self.n), tuple(f"g{i + 1}" for i in range(len(self.rows))), self.rows)

    def reroot(self, v: int) -> "RootedSchreierClass":
        return canonical_rooted_schreier(self.as_action(), v)

    def encode(self) -> str:
        return json.dumps([self.n, [list(r) for r in self.rows]], separators=(",", ":"))

    @classmethod
    def decode(cls, text: str) -> "RootedSchreierClass":
        n, rows = json.loads(text)
        return cls(n, tuple(tuple(r) for r in rows))


def canonical_rooted_schreier(action: Action, root: int) -> RootedSchreierClass:
    k = action.k
    perms = action.perms
    invs = action._inverses
    idx = [-1] * len(action.space)
    idx[root] = 0
    order = [root]
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for g in range(k):
            for v in (perms[g][u], invs[g][u]):
                if idx[v] < 0:
                    idx[v] = len(order)
                    order.append(v)
    n = len(order)
    ident = tuple(range(n))
    rows = [tuple([idx[p[x]] for x in order]) for p in perms]
    while rows and rows[-1] == ident:
        rows.pop()
    # rows are permutations by construction, so validation is skipped
    cls = object.__new__(RootedSchreierClass)
    object.__setattr__(cls, "n", n)
    object.__setattr__(cls, "rows", tuple(rows))
    return cls


def rooted_classes(action: Action) -> list:
    """Canonical rooted class of every atom (computed once per action)."""
    cached = action._cache.get("rooted_classes")
    if cached is None:
        cached = tuple(canonical_rooted_schreier(action, x) for x in action.space.atoms)
        action._cache["rooted_classes"] = cached
    return list(cached)


@dataclass(frozen=True)
class ColoredGraph:
    """Finite graph with a color on every vertex and on every ordered edge.

    ``vertices`` are arbitrary ints (atom ids); colors must be tuples of
    ints (or nested tuples of ints) so that they are totally ordered.
    """

    vertices: tuple
    vertex_colors: tuple
    edges: tuple  # ((u, v, color), ...)
    _out: dict = field(default=None, repr=False, compare=False)
    _in: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        vs = tuple(self.vertices)
        object.__setattr__(self, "vertices", vs)
        if len(set(vs)) != len(vs):
            raise InvalidInputError("duplicate vertex")
        if len(self.vertex_colors) != len(vs):
            raise InvalidInputError("one vertex color per vertex is required")
        pos = {v: i for i, v in enumerate(vs)}
        out = {i: [] for i in range(len(vs))}
        inn = {i: [] for i in range(len(vs))}
        for u, v, c in self.edges:
            if u not in pos or v not in pos:
                raise InvalidInputError(f"edge ({u},{v}) leaves the vertex set")
            if u == v:
                raise InvalidInputError("self-loops are not allowed")
            out[pos[u]].append((c, pos[v]))
            inn[pos[v]].append((c, pos[u]))
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inn)

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True, order=True)
class ColoredComponentClass:
    key: tuple

    @property
    def n(self) -> int:
        return self.key[0]

    def encode(self) -> str:
        return json.dumps(_jsonable(self.key), separators=(",", ":"))


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(y) for y in x]
    return x


def _encoding(g: ColoredGraph, labeling: list) -> tuple:
    """labeling[i] = local vertex placed at canonical position i."""
    n = len(labeling)
    where = [0] * n
    for i, v in enumerate(labeling):
        where[v] = i
    vcols = tuple(g.vertex_colors[v] for v in labeling)
    edges = tuple(sorted((where[u], where[v], c) for u in range(n) for c, v in g._out[u]))
    return (n, vcols, edges)


def _refine(g: ColoredGraph, cell: list) -> list:
    """Iterated color refinement; cell[v] is an ordered cell index."""
    n = len(cell)
    ncells = len(set(cell))
    while True:
        sigs = []
        for v in range(n):
            o = tuple(sorted((c, cell[u]) for c, u in g._out[v]))
            i = tuple(sorted((c, cell[u]) for c, u in g._in[v]))
            sigs.append((cell[v], o, i))
        ranks = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == ncells:
            return new
        cell, ncells = new, len(ranks)


def _initial_cells(g: ColoredGraph) -> list:
    ranks = {c: r for r, c in enumerate(sorted(set(g.vertex_colors)))}
    return [ranks[c] for c in g.vertex_colors]


def _individualize(cell: list, v: int) -> list:
    t = cell[v]
    return [2 * c if (c != t or u == v) else 2 * c + 1 for u, c in enumerate(cell)]


def _leaves(g: ColoredGraph, prune: bool, budget: int):
    """Yield leaf labelings of the individualization-refinement tree.

    With ``prune`` the caller sends back each leaf's encoding status so that
    automorphisms found at the first branching level prune equivalent roots.
    """
    n = len(g)
    start = _refine(g, _initial_cells(g))
    count = 0

    def rec(cell, depth):
        nonlocal count
        if len(set(cell)) == n:
            count += 1
            if count > budget:
                raise ResourceError(f"canonical search exceeded {budget} leaves", required=count, cap=budget)
            labeling = [0] * n
            for v, c in enumerate(cell):
                labeling[c] = v
            yield labeling, depth
            return
        sizes = {}
        for c in cell:
            sizes[c] = sizes.get(c, 0) + 1
        target = min(c for c, s in sizes.items() if s > 1)
        for v in range(n):
            if cell[v] != target:
                continue
            skip = yield ("branch", depth, v)
            if skip:
                continue
            yield from rec(_refine(g, _individualize(cell, v)), depth + 1)

    return rec(start, 0)


def _search(g: ColoredGraph, pin=None, budget: int = 200000):
    """Return (best encoding, labeling) with optional pin (local vertex, position)."""
    n = len(g)
    if n == 0:
        return (0, (), ()), []
    best, best_lab = None, None
    prune = pin is None
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    explored_roots = []
    gen = _leaves(g, prune, budget)
    try:
        item = gen.send(None)
        while True:
            if item[0] == "branch":
                _, depth, v = item
                skip = False
                if prune and depth == 0:
                    if any(find(v) == find(r) for r in explored_roots):
                        skip = True
                    else:
                        explored_roots.append(v)
                item = gen.send(skip)
                continue
            labeling, _ = item
            enc = _encoding(g, labeling)
            ok = pin is None or labeling[pin[1]] == pin[0]
            if prune and best is not None and enc == best:
                for a, b in zip(best_lab, labeling):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
            if ok and (best is None or enc < best):
                best, best_lab = enc, labeling
            item = gen.send(None)
    except StopIteration:
        pass
    return best, best_lab


def _locally_distinct(g: ColoredGraph) -> bool:
    """Whether every vertex sees pairwise distinct colors on its out-edges and on its in-edges."""
    for adj in (g._out, g._in):
        for lst in adj.values():
            cols = [c for c, _ in lst]
            if len(set(cols)) != len(cols):
                return False
    return True


def _connected(g: ColoredGraph) -> bool:
    n = len(g)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for _, v in g._out[u] + g._in[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def _bfs_labeling(g: ColoredGraph, root: int) -> list:
    # neighbor order is forced because colors around a vertex are distinct
    order = [root]
    seen = {root}
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for _, v in sorted(g._out[u]) + sorted(g._in[u]):
            if v not in seen:
                seen.add(v)
                order.append(v)
    return order


def _root_cell(g: ColoredGraph) -> list:
    cells = {}
    for v, c in enumerate(g.vertex_colors):
        cells.setdefault(c, []).append(v)
    _, color = min((len(vs), c) for c, vs in cells.items())
    return cells[color]


def _search_rooted(g: ColoredGraph, pin=None):
    """Canonical form for connected, locally distinct graphs: least BFS encoding over a root cell."""
    best, labs = None, []
    for r in _root_cell(g):
        lab = _bfs_labeling(g, r)
        enc = _encoding(g, lab)
        if best is None or enc < best:
            best, labs = enc, [lab]
        elif enc == best:
            labs.append(lab)
    if pin is None:
        return best, labs[0]
    v, pos = pin
    for lab in labs:
        if lab[pos] == v:
            return best, lab
    # automorphisms preserve the root cell, so every optimal labeling was listed
    return None, None


def canonical_colored_component(component: ColoredGraph, pinned=None, max_size: int = 1024):
    """Canonical class of a colored graph and one isomorphism onto it.

    Returns ``(cls, mapping)`` where ``mapping[vertex] = canonical position``.
    ``pinned=(vertex, position)`` restricts to isomorphisms sending that
    vertex to that position.
    """
    n = len(component)
    if n > max_size:
        raise ResourceError(f"component has {n} vertices, above the bound {max_size}",
                            required=n, cap=max_size)
    if n == 0:
        return ColoredComponentClass((0, (), ())), {}
    search = _search_rooted if _locally_distinct(component) and _connected(component) else _search
    if pinned is None:
        enc, lab = search(component)
    else:
        v, pos = pinned
        try:
            local = component.vertices.index(v)
        except ValueError:
            raise InvalidInputError(f"pinned vertex {v} is not in the component") from None
        enc, _ = search(component)
        penc, lab = search(component, pin=(local, pos))
        if penc != enc:
            raise PreconditionError(f"no isomorphism sends vertex {v} to canonical position {pos}",
                                    {"vertex": v, "position": pos})
    mapping = {component.vertices[local]: i for i, local in enumerate(lab)}
    return ColoredComponentClass(enc), mapping
