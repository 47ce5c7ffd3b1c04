"""Empirical invariant random subgroups of finite actions.

A subgroup of the free group arising as a point stabilizer is represented
by the canonical rooted Schreier table of the point; the empirical IRS of
an action is the pushforward of the atom weights onto these tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .action import Action, FactorMap, Word, fixed_event, is_factor_map, support_event
from .canonical import RootedSchreierClass, rooted_classes
from .errors import InvalidInputError, InvariantViolation
from .measure import AtomSpace


@dataclass(frozen=True)
class EmpiricalIRS:
    masses: tuple  # ((RootedSchreierClass, Fraction), ...) sorted by class

    def __post_init__(self):
        items = tuple(sorted(((c, Fraction(m)) for c, m in self.masses), key=lambda cm: cm[0]))
        object.__setattr__(self, "masses", items)
        if any(m <= 0 for _, m in items):
            raise InvalidInputError("IRS masses must be positive")
        if sum((m for _, m in items), Fraction(0)) != 1:
            raise InvalidInputError("IRS masses must sum to 1")
        if len({c for c, _ in items}) != len(items):
            raise InvalidInputError("duplicate class in IRS")

    def as_dict(self) -> dict:
        return dict(self.masses)

    def classes(self) -> list:
        return [c for c, _ in self.masses]

    def mass(self, cls: RootedSchreierClass) -> Fraction:
        return self.as_dict().get(cls, Fraction(0))

    def fix_cylinder(self, F: Iterable[Word], G: Iterable[Word] = ()) -> Fraction:
        """Mass of subgroups containing every word of F and no word of G."""
        F, G = list(F), list(G)
        return sum((m for c, m in self.masses
                    if all(c.fixes(w) for w in F) and not any(c.fixes(w) for w in G)), Fraction(0))

    def supp_cylinder(self, F: Iterable[Word]) -> Fraction:
        """Mass of subgroups containing no word of F (the support-intersection form)."""
        F = list(F)
        return sum((m for c, m in self.masses if not any(c.fixes(w) for w in F)), Fraction(0))

    def serialize(self) -> list:
        return [[c.encode(), f"{m.numerator}/{m.denominator}"] for c, m in self.masses]

    @classmethod
    def deserialize(cls, items) -> "EmpiricalIRS":
        return cls(tuple((RootedSchreierClass.decode(e), Fraction(m)) for e, m in items))


def _irs_from_classes(action: Action, cls_of: list) -> EmpiricalIRS:
    masses = {}
    w = action.space.weights
    for x, c in enumerate(cls_of):
        masses[c] = masses.get(c, Fraction(0)) + w[x]
    return EmpiricalIRS(tuple(masses.items()))


def empirical_irs(action: Action) -> EmpiricalIRS:
    return _irs_from_classes(action, rooted_classes(action))


def irs_equal(i1: EmpiricalIRS, i2: EmpiricalIRS) -> bool:
    return i1.masses == i2.masses


def distinguishing_class(i1: EmpiricalIRS, i2: EmpiricalIRS):
    """First class (in canonical order) whose masses differ, with both masses."""
    d1, d2 = i1.as_dict(), i2.as_dict()
    for c in sorted(set(d1) | set(d2)):
        if d1.get(c, 0) != d2.get(c, 0):
            return c, d1.get(c, Fraction(0)), d2.get(c, Fraction(0))
    return None


@dataclass(frozen=True)
class CylinderQuery:
    F: tuple
    G: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(self.F))
        object.__setattr__(self, "G", tuple(self.G))
        if set(self.F) & set(self.G):
            raise InvalidInputError("F and G must be disjoint")


def _fix_meet(action: Action, words) -> frozenset:
    cur = frozenset(action.space.atoms)
    for w in words:
        cur &= fixed_event(action, w).atoms
    return cur


def irs_cylinder_direct(action: Action, q: CylinderQuery) -> Fraction:
    atoms = _fix_meet(action, q.F)
    for w in q.G:
        atoms &= support_event(action, w).atoms
    return action.space.measure(atoms)


def irs_cylinder_inclusion_exclusion(action: Action, q: CylinderQuery) -> Fraction:
    """Signed sum of F-only cylinders over subsets J of G."""
    total = Fraction(0)
    G = list(q.G)
    for size in range(len(G) + 1):
        sign = -1 if size % 2 else 1
        for J in combinations(G, size):
            total += sign * action.space.measure(_fix_meet(action, list(q.F) + list(J)))
    return total


def irs_cylinder(action: Action, q: CylinderQuery) -> Fraction:
    """mu of the atoms fixed by every word of F and moved by every word of G."""
    direct = irs_cylinder_direct(action, q)
    ie = irs_cylinder_inclusion_exclusion(action, q)
    if direct != ie:
        raise InvariantViolation(f"inclusion-exclusion gives {ie}, direct count gives {direct}")
    return direct


def supp_cylinder(action: Action, F: Iterable[Word]) -> Fraction:
    """mu of the intersection of the supports of the words of F."""
    atoms = frozenset(action.space.atoms)
    for w in F:
        atoms &= support_event(action, w).atoms
    return action.space.measure(atoms)


def irs_factor(action: Action) -> tuple:
    """The conjugation action on occurring classes, and the stabilizer factor map onto it.

    Class-space atom i is the i-th class of ``empirical_irs(action).classes()``.
    """
    cls_of = rooted_classes(action)
    irs = _irs_from_classes(action, cls_of)
    classes = irs.classes()
    index = {c: i for i, c in enumerate(classes)}
    k = action.k
    perms = []
    for g in range(1, k + 1):
        row = [None] * len(classes)
        for x in action.space.atoms:
            src, dst = index[cls_of[x]], index[cls_of[action.apply_letter(g, x)]]
            if row[src] is None:
                row[src] = dst
            elif row[src] != dst:
                raise InvariantViolation("re-rooting transport is not well defined")
        perms.append(tuple(row))
    space = AtomSpace(tuple(m for _, m in irs.masses), tuple(f"c{i}" for i in range(len(classes))))
    class_action = Action(space, action.names, tuple(perms))
    fmap = FactorMap(action, class_action, tuple(index[c] for c in cls_of))
    verdict = is_factor_map(fmap)
    if not verdict:
        raise InvariantViolation(f"stabilizer map is not a factor map: {verdict.counterexample}")
    return class_action, fmap
