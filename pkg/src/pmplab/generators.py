"""Seeded instance families."""

from __future__ import annotations

import random
import re
from fractions import Fraction
from typing import Mapping

from .action import Action
from .errors import InvalidInputError, ParseError
from .measure import AtomSpace


def _names(k: int) -> tuple:
    base = "ghijkl"
    return tuple(base[i] if i < len(base) else f"g{i + 1}" for i in range(k))


def cyclic(n: int) -> Action:
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    return Action(AtomSpace.uniform(n), ("g",), (tuple((i + 1) % n for i in range(n)),))


def orbits(spec: str) -> Action:
    """One generator whose cycles have the listed lengths, e.g. "4,2"; atoms are uniform."""
    try:
        lengths = [int(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise ParseError(f"bad orbit list {spec!r}", "orbits") from None
    if not lengths or any(m < 1 for m in lengths):
        raise InvalidInputError("orbit lengths must be positive")
    perm, off = [], 0
    for m in lengths:
        perm.extend(off + (i + 1) % m for i in range(m))
        off += m
    return Action(AtomSpace.uniform(off), ("g",), (tuple(perm),))


def random_action(n: int, k: int, seed: int) -> Action:
    """k independent uniform permutations of n uniform atoms."""
    if n < 1 or k < 0:
        raise InvalidInputError("need n >= 1 and k >= 0")
    rng = random.Random(seed)
    perms = []
    for _ in range(k):
        p = list(range(n))
        rng.shuffle(p)
        perms.append(tuple(p))
    return Action(AtomSpace.uniform(n), _names(k), tuple(perms))


_CYCLE = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str, n: int) -> tuple:
    """Permutation of range(n) from cycle notation such as "(0 1 2)(3 4)"."""
    perm = list(range(n))
    rest = _CYCLE.sub("", text).strip()
    if rest:
        raise ParseError(f"unexpected text {rest!r} in cycle notation", text)
    seen = set()
    for body in _CYCLE.findall(text):
        try:
            pts = [int(t) for t in body.replace(",", " ").split()]
        except ValueError:
            raise ParseError(f"non-integer point in cycle ({body})", text) from None
        for p in pts:
            if not 0 <= p < n or p in seen:
                raise ParseError(f"point {p} is out of range or repeated", text)
            seen.add(p)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            perm[a] = b
    return tuple(perm)


def coset_action(n: int, gens: Mapping[str, str]) -> Action:
    """Uniform action on n points with generators given in cycle notation."""
    names = tuple(gens)
    return Action(AtomSpace.uniform(n), names, tuple(parse_cycles(gens[g], n) for g in names))


def _transitive_template(rng: random.Random, m: int, k: int) -> tuple:
    """Perms (length k) of a transitive action on m points, from a random spanning walk."""
    while True:
        perms = []
        for _ in range(k):
            p = list(range(m))
            rng.shuffle(p)
            perms.append(p)
        # connect orbits with the first generator if needed
        act = Action(AtomSpace.uniform(m), _names(k), tuple(tuple(p) for p in perms))
        orbs = act.orbits()
        if len(orbs) == 1:
            return tuple(tuple(p) for p in perms)
        if rng.random() < 0.5:
            cyc = [x for o in orbs for x in o]
            p = [0] * m
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                p[a] = b
            perms[0] = p
            return tuple(tuple(q) for q in perms)


def _split(rng: random.Random, total: int, parts: int) -> list:
    cuts = sorted(rng.sample(range(1, total), parts - 1)) if parts > 1 else []
    return [b - a for a, b in zip([0] + cuts, cuts + [total])]


def _assemble(rng: random.Random, pieces, k: int, den: int) -> Action:
    """Disjoint union of (template perms, size, integer mass) with shuffled atom ids."""
    n = sum(m for _, m, _ in pieces)
    order = list(range(n))
    rng.shuffle(order)
    weights = [None] * n
    perms = [[None] * n for _ in range(k)]
    off = 0
    for tpl, m, mass in pieces:
        ids = order[off:off + m]
        for i in range(m):
            weights[ids[i]] = Fraction(mass, den * m)
        for g in range(k):
            for i in range(m):
                perms[g][ids[i]] = ids[tpl[g][i]] if tpl else ids[i]
        off += m
    return Action(AtomSpace(tuple(weights)), _names(k), tuple(tuple(p) for p in perms))


def equal_irs_pair(seed: int, max_atoms: int = 60, max_k: int = 3, max_orbit: int = 8) -> tuple:
    """Two actions with equal empirical IRS.

    A few transitive orbit types are drawn; each type's total mass is split
    into a random number of copies, independently on the two sides.
    """
    rng = random.Random(seed)
    k = rng.randint(1, max_k)
    types = []
    budget = max_atoms
    while budget > 0 and len(types) < 5:
        m = rng.randint(1, min(max_orbit, budget))
        cap = rng.randint(1, min(3, budget // m))
        types.append((_transitive_template(rng, m, k), m, cap))
        budget -= m * cap
    den = 12 * len(types)
    masses = _split(rng, den, len(types)) if len(types) > 1 else [den]
    sides = []
    for _ in range(2):
        pieces = []
        for (tpl, m, cap), mass in zip(types, masses):
            copies = rng.randint(1, min(cap, mass))
            for part in _split(rng, mass, copies):
                pieces.append((tpl, m, part))
        sides.append(_assemble(rng, pieces, k, den))
    return sides[0], sides[1]


def random_weighted_action(seed: int, max_atoms: int = 12, max_k: int = 2) -> Action:
    """A random action whose orbit masses are random rationals (weights constant on orbits)."""
    rng = random.Random(seed)
    n = rng.randint(1, max_atoms)
    k = rng.randint(0, max_k)
    base = random_action(n, k, rng.randrange(1 << 30))
    orbs = base.orbits()
    masses = _split(rng, 6 * len(orbs), len(orbs)) if len(orbs) > 1 else [1]
    total = sum(masses)
    w = [None] * n
    for o, m in zip(orbs, masses):
        for x in o:
            w[x] = Fraction(m, total * len(o))
    return Action(AtomSpace(tuple(w)), base.names, base.perms)
