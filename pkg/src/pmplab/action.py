"""Measure-preserving actions of finitely generated free groups.

Generators are numbered 1..k; a word is a freely reduced tuple of signed
generator numbers, ``-i`` standing for the inverse of generator ``i``.
Generators not listed by an action act as the identity, so every action is
formally an action of the free group on countably many generators.

Words act on the left: ``(s1 s2 ... sm) . x = s1(s2(...sm(x)))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainMismatchError, InvalidInputError, InvariantViolation, ResourceError
from .measure import AtomSpace, Event, Subalgebra, Verdict, generated_subalgebra, join_partitions

Perm = tuple


def _reduce(letters: Iterable[int]) -> tuple:
    out = []
    for s in letters:
        if s == 0:
            raise InvalidInputError("generator index 0 is not a letter")
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")


@dataclass(frozen=True, order=True)
class Word:
    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def gen(cls, i: int, power: int = 1) -> "Word":
        s = i if power > 0 else -i
        return cls((s,) * abs(power))

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __pow__(self, k: int) -> "Word":
        base = self if k >= 0 else self.inverse()
        return Word(base.letters * abs(k))

    def inverse(self) -> "Word":
        return Word(tuple(-s for s in reversed(self.letters)))

    def max_generator(self) -> int:
        return max((abs(s) for s in self.letters), default=0)

    @classmethod
    def parse(cls, text: str, names: Sequence[str]) -> "Word":
        """Parse ``"a.b^-1.a^2"``; ``"e"``, ``"1"`` or ``""`` is the identity."""
        text = text.strip()
        if text in ("", "e", "1"):
            return cls(())
        letters = []
        for tok in re.split(r"[.\s*]+", text):
            if not tok:
                continue
            m = _TOKEN.match(tok)
            if not m or m.group(1) not in names:
                raise InvalidInputError(f"cannot parse word token {tok!r} (generators: {list(names)})")
            i = list(names).index(m.group(1)) + 1
            power = int(m.group(2)) if m.group(2) else 1
            letters.extend([i if power > 0 else -i] * abs(power))
        return cls(tuple(letters))

    def format(self, names: Sequence[str]) -> str:
        if not self.letters:
            return "e"
        parts = []
        run_letter, run = None, 0
        for s in self.letters + (None,):
            if s == run_letter:
                run += 1
                continue
            if run_letter is not None:
                name = names[abs(run_letter) - 1] if abs(run_letter) <= len(names) else f"x{abs(run_letter)}"
                power = run if run_letter > 0 else -run
                parts.append(name if power == 1 else f"{name}^{power}")
            run_letter, run = s, 1
        return ".".join(parts)


def identity_perm(n: int) -> Perm:
    return tuple(range(n))


def compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return tuple(p[q[i]] for i in range(len(q)))


def invert(p: Perm) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def cycles(p: Perm) -> list:
    seen = [False] * len(p)
    out = []
    for i in range(len(p)):
        if seen[i]:
            continue
        cyc = []
        j = i
        while not seen[j]:
            seen[j] = True
            cyc.append(j)
            j = p[j]
        out.append(tuple(cyc))
    return out


def is_permutation(p: Sequence[int], n: int) -> bool:
    return len(p) == n and sorted(p) == list(range(n))


@dataclass(frozen=True)
class Action:
    space: AtomSpace
    names: tuple
    perms: tuple
    _inverses: tuple = field(default=None, repr=False, compare=False)
    _cache: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.space)
        names = tuple(str(x) for x in self.names)
        perms = tuple(tuple(int(v) for v in p) for p in self.perms)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "perms", perms)
        if len(names) != len(perms):
            raise InvalidInputError("one name per generator is required")
        if len(set(names)) != len(names):
            raise InvalidInputError("generator names must be distinct")
        w = self.space.weights
        for name, p in zip(names, perms):
            if not is_permutation(p, n):
                raise InvalidInputError(f"generator {name} is not a permutation of {n} atoms")
            for x in range(n):
                if w[p[x]] != w[x]:
                    raise InvalidInputError(
                        f"generator {name} maps atom {self.space.labels[x]} (weight {w[x]}) "
                        f"onto atom {self.space.labels[p[x]]} (weight {w[p[x]]})")
        object.__setattr__(self, "_inverses", tuple(invert(p) for p in perms))
        # derived data (rooted classes) keyed by name; never part of equality
        object.__setattr__(self, "_cache", {})

    @classmethod
    def trivial(cls, space: AtomSpace) -> "Action":
        return cls(space, (), ())

    @property
    def k(self) -> int:
        return len(self.perms)

    def __len__(self):
        return len(self.space)

    def letter(self, s: int) -> Perm:
        i = abs(s)
        if i > self.k:
            return identity_perm(len(self.space))
        return self.perms[i - 1] if s > 0 else self._inverses[i - 1]

    def apply_letter(self, s: int, x: int) -> int:
        i = abs(s)
        if i > self.k:
            return x
        return self.perms[i - 1][x] if s > 0 else self._inverses[i - 1][x]

    def act(self, w: Word, x: int) -> int:
        for s in reversed(w.letters):
            x = self.apply_letter(s, x)
        return x

    def word(self, text: str) -> Word:
        return Word.parse(text, self.names)

    def image(self, w: Word, event: Event) -> Event:
        if event.space != self.space:
            raise DomainMismatchError("event is not on the action's space")
        p = evaluate_word(self, w)
        return Event(self.space, frozenset(p[x] for x in event.atoms))

    def generator_words(self, inverses: bool = True) -> list:
        out = []
        for i in range(1, self.k + 1):
            out.append(Word((i,)))
            if inverses:
                out.append(Word((-i,)))
        return out

    def orbits(self) -> list:
        """Orbits of the generated permutation group, each sorted, ordered by minimum."""
        n = len(self.space)
        seen = [False] * n
        out = []
        for r in range(n):
            if seen[r]:
                continue
            seen[r] = True
            stack, orb = [r], [r]
            while stack:
                x = stack.pop()
                for p in self.perms + self._inverses:
                    y = p[x]
                    if not seen[y]:
                        seen[y] = True
                        orb.append(y)
                        stack.append(y)
            out.append(tuple(sorted(orb)))
        return out

    def with_generators(self, k: int) -> "Action":
        """Pad with identity generators up to k (the unlisted-generator convention)."""
        if k <= self.k:
            return self
        names = list(self.names)
        taken = set(names)
        j = self.k + 1
        while len(names) < k:
            name = f"g{j}"
            while name in taken:
                name += "_"
            taken.add(name)
            names.append(name)
            j += 1
        ident = identity_perm(len(self.space))
        return Action(self.space, tuple(names), self.perms + (ident,) * (k - self.k))


def evaluate_word(action: Action, w: Word) -> Perm:
    n = len(action.space)
    out = list(range(n))
    for s in reversed(w.letters):
        p = action.letter(s)
        out = [p[v] for v in out]
    return tuple(out)


def fixed_event(action: Action, w: Word) -> Event:
    p = evaluate_word(action, w)
    return Event(action.space, frozenset(x for x in range(len(p)) if p[x] == x))


def support_event(action: Action, w: Word) -> Event:
    return ~fixed_event(action, w)


def t_term(space: AtomSpace, perm: Perm, a: Event) -> Event:
    """w^-1(a - wa) | (a - wa) | w(a - wa)."""
    inv = invert(perm)
    wa = frozenset(perm[x] for x in a.atoms)
    core = a.atoms - wa
    return Event(space, frozenset(inv[x] for x in core) | core | frozenset(perm[x] for x in core))


@dataclass(frozen=True)
class SupportWitness:
    a0: Event
    support: Event

    @property
    def measure(self) -> Fraction:
        return self.support.measure


def support_witness(space: AtomSpace, perm: Perm, order: Sequence[int] = None) -> SupportWitness:
    """Greedy maximal event disjoint from its image, and the support it spans.

    Atoms are offered in ``order`` (default: atom-id order).  An atom that is
    rejected stays rejected as the set grows, so one pass yields a maximal set.
    """
    n = len(space)
    if not is_permutation(perm, n):
        raise InvalidInputError("not a permutation of the space")
    w = space.weights
    if any(w[perm[x]] != w[x] for x in range(n)):
        raise InvalidInputError("permutation does not preserve weights")
    inv = invert(perm)
    order = range(n) if order is None else order
    chosen = set()
    for x in order:
        if perm[x] == x or perm[x] in chosen or inv[x] in chosen:
            continue
        chosen.add(x)
    a0 = frozenset(chosen)
    support = frozenset(inv[x] for x in a0) | a0 | frozenset(perm[x] for x in a0)
    moved = frozenset(x for x in range(n) if perm[x] != x)
    if support != moved:
        raise InvariantViolation("three-term support differs from the moved set")
    return SupportWitness(Event(space, a0), Event(space, support))


def uniform_distance(space: AtomSpace, p: Perm, q: Perm) -> Fraction:
    """sup over events a of mu(pa sym-diff qa), in closed form.

    With s = q^-1 p, mu(pa ^ qa) = mu(sa ^ a) = 2 mu(sa - a); on an s-cycle
    of length m the largest |sa - a| is floor(m/2) (alternate atoms).
    """
    if len(p) != len(space) or len(q) != len(space):
        raise DomainMismatchError("permutations are not on this space")
    s = compose(invert(q), p)
    total = Fraction(0)
    for cyc in cycles(s):
        if len(cyc) > 1:
            total += 2 * (len(cyc) // 2) * space.weights[cyc[0]]
    return total


def action_distance(alpha: Action, beta: Action) -> Fraction:
    """Max over generators of the uniform distance (unlisted generators are identity)."""
    if alpha.space != beta.space:
        raise DomainMismatchError("actions live on different spaces")
    k = max(alpha.k, beta.k)
    return max((uniform_distance(alpha.space, alpha.letter(i), beta.letter(i)) for i in range(1, k + 1)),
               default=Fraction(0))


@dataclass(frozen=True)
class FactorMap:
    source: Action
    target: Action
    mapping: tuple

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(v) for v in self.mapping))

    def preimage(self, event: Event) -> Event:
        if event.space != self.target.space:
            raise DomainMismatchError("event is not on the target space")
        return Event(self.source.space, frozenset(y for y, x in enumerate(self.mapping) if x in event.atoms))

    def image(self, event: Event) -> Event:
        return Event(self.target.space, frozenset(self.mapping[y] for y in event.atoms))

    def fibers(self) -> dict:
        out = {x: [] for x in range(len(self.target.space))}
        for y, x in enumerate(self.mapping):
            out[x].append(y)
        return out


def is_factor_map(candidate: FactorMap) -> Verdict:
    """Measure preservation and equivariance, with the first violation on failure."""
    src, tgt, m = candidate.source, candidate.target, candidate.mapping
    if len(m) != len(src.space):
        return Verdict(False, {"reason": "mapping length differs from source atom count"})
    if any(not 0 <= x < len(tgt.space) for x in m):
        return Verdict(False, {"reason": "mapping leaves the target space"})
    sums = [Fraction(0)] * len(tgt.space)
    for y, x in enumerate(m):
        sums[x] += src.space.weights[y]
    for x, s in enumerate(sums):
        if s != tgt.space.weights[x]:
            return Verdict(False, {"reason": "not measure-preserving", "atom": x,
                                   "fiber_weight": s, "target_weight": tgt.space.weights[x]})
    k = max(src.k, tgt.k)
    for i in range(1, k + 1):
        for y in range(len(m)):
            if m[src.apply_letter(i, y)] != tgt.apply_letter(i, m[y]):
                return Verdict(False, {"reason": "not equivariant", "atom": y, "generator": i})
    return Verdict(True)


def distance_to_support(a: Event, w: Word, action: Action) -> Fraction:
    """d(a, supp w) = mu(a - supp) + mu(supp - a)."""
    if a.space != action.space:
        raise DomainMismatchError("event is not on the action's space")
    return a.distance(support_event(action, w))


def event_orbit(action: Action, event: Event, cap: int) -> list:
    """All translates of an event under the image group, breadth-first."""
    seen = {event.atoms}
    out = [event.atoms]
    frontier = [event.atoms]
    gens = [action.letter(s) for s in range(1, action.k + 1)]
    while frontier:
        nxt = []
        for e in frontier:
            for p in gens:
                f = frozenset(p[x] for x in e)
                if f not in seen:
                    seen.add(f)
                    out.append(f)
                    nxt.append(f)
                    if len(out) > cap:
                        raise ResourceError(f"orbit of an event exceeds the cap of {cap} translates",
                                            required=len(out), cap=cap)
        frontier = nxt
    return [Event(action.space, e) for e in out]


def stabilizer_partition(action: Action) -> Subalgebra:
    """Atoms grouped by point stabilizer.

    Two atoms have the same stabilizer exactly when their rooted Schreier
    graphs coincide, so the canonical rooted class is used as the key.
    """
    from .canonical import canonical_rooted_schreier

    groups = {}
    for x in action.space.atoms:
        groups.setdefault(canonical_rooted_schreier(action, x), []).append(x)
    return Subalgebra(action.space, tuple(frozenset(g) for g in groups.values()))


def definable_closure(action: Action, A: Iterable[Event], cap: int = 4096) -> Subalgebra:
    """Subalgebra generated by all translates of A together with all supports."""
    translates = []
    for e in A:
        if e.space != action.space:
            raise DomainMismatchError("event is not on the action's space")
        translates.extend(event_orbit(action, e, cap))
    base = generated_subalgebra(action.space, translates)
    return join_partitions(action.space, [base.blocks, stabilizer_partition(action).blocks])


def image_group(action: Action, cap: int = 4096) -> list:
    """Elements of the finite permutation group generated by the action."""
    n = len(action.space)
    ident = identity_perm(n)
    elems = {ident}
    frontier = [ident]
    gens = list(action.perms)
    while frontier:
        nxt = []
        for g in frontier:
            for p in gens:
                h = compose(p, g)
                if h not in elems:
                    elems.add(h)
                    nxt.append(h)
                    if len(elems) > cap:
                        raise ResourceError(f"image group has more than {cap} elements",
                                            required=len(elems), cap=cap)
        frontier = nxt
    return sorted(elems)
