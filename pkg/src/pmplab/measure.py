"""Exact finite measure algebras.

A finite probability space is a tuple of positive rational atom weights
summing to one.  Events are sets of atom indices.  Subalgebras are
partitions of the atoms; the algebra they generate is the set of unions of
blocks.  All arithmetic is done with :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .errors import DomainMismatchError, InvalidInputError


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise InvalidInputError(f"refusing float weight {value!r}; use a rational")
    return Fraction(value)


@dataclass(frozen=True)
class AtomSpace:
    weights: tuple
    labels: tuple = None

    def __post_init__(self):
        weights = tuple(as_fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if not weights:
            raise InvalidInputError("an atom space needs at least one atom")
        for i, w in enumerate(weights):
            if w <= 0:
                raise InvalidInputError(f"atom {i} has non-positive weight {w}")
        total = sum(weights, Fraction(0))
        if total != 1:
            raise InvalidInputError(f"weights sum to {total}, not 1")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(weights))))
        else:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != len(weights):
                raise InvalidInputError("label count differs from atom count")
            if len(set(labels)) != len(labels):
                raise InvalidInputError("atom labels are not distinct")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def uniform(cls, n: int) -> "AtomSpace":
        return cls(tuple(Fraction(1, n) for _ in range(n)))

    def __len__(self):
        return len(self.weights)

    @property
    def atoms(self) -> range:
        return range(len(self.weights))

    def event(self, members: Iterable[int]) -> "Event":
        return Event(self, frozenset(members))

    def empty(self) -> "Event":
        return Event(self, frozenset())

    def full(self) -> "Event":
        return Event(self, frozenset(self.atoms))

    def measure(self, atoms: Iterable[int]) -> Fraction:
        w = self.weights
        return sum((w[i] for i in atoms), Fraction(0))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InvalidInputError(f"no atom labelled {label!r}") from None


@dataclass(frozen=True)
class Event:
    space: AtomSpace = field(repr=False)
    atoms: frozenset

    def __post_init__(self):
        atoms = frozenset(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        n = len(self.space)
        bad = [a for a in atoms if not (isinstance(a, int) and 0 <= a < n)]
        if bad:
            raise DomainMismatchError(f"atoms {sorted(bad)} are not in a space of {n} atoms")

    def _check(self, other: "Event"):
        if not isinstance(other, Event) or (other.space is not self.space and other.space != self.space):
            raise DomainMismatchError("events belong to different spaces")

    @property
    def measure(self) -> Fraction:
        return self.space.measure(self.atoms)

    def __and__(self, other):
        self._check(other)
        return Event(self.space, self.atoms & other.atoms)

    def __or__(self, other):
        self._check(other)
        return Event(self.space, self.atoms | other.atoms)

    def __sub__(self, other):
        self._check(other)
        return Event(self.space, self.atoms - other.atoms)

    def __xor__(self, other):
        self._check(other)
        return Event(self.space, self.atoms ^ other.atoms)

    def __invert__(self):
        return Event(self.space, frozenset(self.space.atoms) - self.atoms)

    def __le__(self, other):
        self._check(other)
        return self.atoms <= other.atoms

    def __contains__(self, atom):
        return atom in self.atoms

    def __iter__(self):
        return iter(sorted(self.atoms))

    def __len__(self):
        return len(self.atoms)

    def distance(self, other: "Event") -> Fraction:
        """Measure-algebra metric d(a, b) = mu(a sym-diff b)."""
        return (self ^ other).measure


def _canonical_blocks(blocks: Iterable[Iterable[int]]) -> tuple:
    return tuple(sorted((frozenset(b) for b in blocks), key=min))


@dataclass(frozen=True)
class Subalgebra:
    space: AtomSpace = field(repr=False)
    blocks: tuple

    def __post_init__(self):
        blocks = _canonical_blocks(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen = set()
        for b in blocks:
            if not b:
                raise InvalidInputError("empty block in partition")
            if seen & b:
                raise InvalidInputError("partition blocks overlap")
            seen |= b
        if seen != set(self.space.atoms):
            raise InvalidInputError("partition blocks do not cover the space")

    @classmethod
    def trivial(cls, space: AtomSpace) -> "Subalgebra":
        return cls(space, (frozenset(space.atoms),))

    @classmethod
    def discrete(cls, space: AtomSpace) -> "Subalgebra":
        return cls(space, tuple(frozenset([i]) for i in space.atoms))

    def block_of(self, atom: int) -> int:
        for j, b in enumerate(self.blocks):
            if atom in b:
                return j
        raise DomainMismatchError(f"atom {atom} not in space")

    def block_events(self) -> list:
        return [Event(self.space, b) for b in self.blocks]

    def contains(self, event: Event) -> bool:
        """True when the event is a union of blocks."""
        return all(b <= event.atoms or not (b & event.atoms) for b in self.blocks)

    def refines(self, other: "Subalgebra") -> bool:
        return all(any(b <= c for c in other.blocks) for b in self.blocks)

    def __len__(self):
        return len(self.blocks)


def join_partitions(space: AtomSpace, partitions: Iterable[Sequence[Iterable[int]]]) -> Subalgebra:
    """Coarsest common refinement of several partitions of the same space."""
    key = {i: () for i in space.atoms}
    for blocks in partitions:
        where = {}
        for j, b in enumerate(blocks):
            for a in b:
                where[a] = j
        for i in space.atoms:
            key[i] = key[i] + (where[i],)
    groups = {}
    for i in space.atoms:
        groups.setdefault(key[i], []).append(i)
    return Subalgebra(space, tuple(frozenset(g) for g in groups.values()))


def generated_subalgebra(space: AtomSpace, events: Iterable[Event]) -> Subalgebra:
    """Coarsest partition in which every event is a union of blocks."""
    events = list(events)
    for e in events:
        if e.space != space:
            raise DomainMismatchError("event does not belong to this space")
    groups = {}
    for i in space.atoms:
        sig = tuple(i in e.atoms for e in events)
        groups.setdefault(sig, []).append(i)
    return Subalgebra(space, tuple(frozenset(g) for g in groups.values()))


@dataclass(frozen=True)
class ConditionalExpectation:
    subalgebra: Subalgebra
    values: tuple

    def at(self, atom: int) -> Fraction:
        return self.values[self.subalgebra.block_of(atom)]

    def integral(self) -> Fraction:
        """Sum of value * mu(block); equals mu of the conditioned event."""
        sp = self.subalgebra.space
        return sum((v * sp.measure(b) for v, b in zip(self.values, self.subalgebra.blocks)), Fraction(0))


def conditional_expectation(space: AtomSpace, a: Event, B: Subalgebra) -> ConditionalExpectation:
    if a.space != space or B.space != space:
        raise DomainMismatchError("event and subalgebra must share the space")
    values = tuple(space.measure(a.atoms & b) / space.measure(b) for b in B.blocks)
    return ConditionalExpectation(B, values)


@dataclass(frozen=True)
class Verdict:
    """Boolean outcome that carries a counterexample when false."""

    ok: bool
    counterexample: object = None

    def __bool__(self):
        return self.ok


def is_independent(space: AtomSpace, A: Iterable[Event], B: Iterable[Event], C: Subalgebra) -> Verdict:
    """Conditional independence of the algebras generated by A and B over C.

    Only atoms of the two generated algebras are checked.  Every element of
    a generated algebra is a disjoint union of its atoms and the product
    P(a)P(b) and P(a & b) are both additive in each argument over disjoint
    unions, so atom-level equality implies equality for all elements.
    """
    if C.space != space:
        raise DomainMismatchError("subalgebra belongs to another space")
    alg_a = generated_subalgebra(space, A)
    alg_b = generated_subalgebra(space, B)
    for a in alg_a.blocks:
        for b in alg_b.blocks:
            ab = a & b
            for j, c in enumerate(C.blocks):
                mc = space.measure(c)
                pa = space.measure(a & c) / mc
                pb = space.measure(b & c) / mc
                pab = space.measure(ab & c) / mc
                if pa * pb != pab:
                    return Verdict(False, {
                        "a": sorted(a), "b": sorted(b), "block": sorted(c),
                        "P(a)P(b)": pa * pb, "P(a&b)": pab,
                    })
    return Verdict(True)


def _pattern_meet(space: AtomSpace, events: Sequence[Event], signs: Sequence[int]) -> frozenset:
    cur = frozenset(space.atoms)
    for e, s in zip(events, signs):
        cur = cur & e.atoms if s > 0 else cur - e.atoms
    return cur


def tp_equal(space: AtomSpace, a_tuple: Sequence[Event], b_tuple: Sequence[Event], C: Subalgebra) -> Verdict:
    """Equality of types over C: all sign-pattern meets have equal C-conditional probabilities."""
    if len(a_tuple) != len(b_tuple):
        raise InvalidInputError("tuples must have equal length")
    for e in list(a_tuple) + list(b_tuple):
        if e.space != space:
            raise DomainMismatchError("event does not belong to this space")
    if C.space != space:
        raise DomainMismatchError("subalgebra belongs to another space")
    for signs in product((1, -1), repeat=len(a_tuple)):
        ma = _pattern_meet(space, a_tuple, signs)
        mb = _pattern_meet(space, b_tuple, signs)
        for c in C.blocks:
            if space.measure(ma & c) != space.measure(mb & c):
                return Verdict(False, {"pattern": signs, "block": sorted(c),
                                       "a": space.measure(ma & c) / space.measure(c),
                                       "b": space.measure(mb & c) / space.measure(c)})
    return Verdict(True)


@dataclass(frozen=True)
class Refinement:
    """A weighted finite space mapping onto a coarser one, fiber weights adding up."""

    source: AtomSpace
    refined: AtomSpace
    parent: tuple

    def __post_init__(self):
        if len(self.parent) != len(self.refined):
            raise InvalidInputError("parent map must cover every refined atom")
        sums = [Fraction(0)] * len(self.source)
        for r, p in enumerate(self.parent):
            if not 0 <= p < len(self.source):
                raise InvalidInputError(f"refined atom {r} maps outside the source")
            sums[p] += self.refined.weights[r]
        for i, s in enumerate(sums):
            if s != self.source.weights[i]:
                raise InvalidInputError(
                    f"fiber over atom {self.source.labels[i]} weighs {s}, expected {self.source.weights[i]}")

    def fiber(self, atom: int) -> list:
        return [r for r, p in enumerate(self.parent) if p == atom]

    def lift(self, event: Event) -> Event:
        if event.space != self.source:
            raise DomainMismatchError("event is not on the source space")
        return Event(self.refined, frozenset(r for r, p in enumerate(self.parent) if p in event.atoms))

    def pushforward(self) -> AtomSpace:
        sums = [Fraction(0)] * len(self.source)
        for r, p in enumerate(self.parent):
            sums[p] += self.refined.weights[r]
        return AtomSpace(tuple(sums), self.source.labels)


def refine(space: AtomSpace, plan: Sequence[Sequence]) -> Refinement:
    """Split atom i into pieces with weights plan[i]."""
    if len(plan) != len(space):
        raise InvalidInputError(f"plan has {len(plan)} entries for {len(space)} atoms")
    weights, labels, parent = [], [], []
    for i, pieces in enumerate(plan):
        pieces = [as_fraction(p) for p in pieces]
        if not pieces or any(p <= 0 for p in pieces):
            raise InvalidInputError(f"atom {space.labels[i]}: split weights must be positive")
        if sum(pieces, Fraction(0)) != space.weights[i]:
            raise InvalidInputError(
                f"atom {space.labels[i]}: split weights sum to {sum(pieces, Fraction(0))}, "
                f"expected {space.weights[i]}")
        for j, p in enumerate(pieces):
            weights.append(p)
            labels.append(space.labels[i] if len(pieces) == 1 else f"{space.labels[i]}.{j}")
            parent.append(i)
    return Refinement(space, AtomSpace(tuple(weights), tuple(labels)), tuple(parent))
