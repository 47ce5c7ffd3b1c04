"""Disintegration over factors, relative independent joinings and amalgams."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .action import Action, FactorMap, Word, is_factor_map, support_event
from .canonical import rooted_classes
from .errors import DomainMismatchError, InvariantViolation, PreconditionError
from .irs import distinguishing_class, empirical_irs, irs_equal, irs_factor
from .measure import AtomSpace, Event


@dataclass(frozen=True)
class Disintegration:
    factor: FactorMap
    fibers: tuple  # fibers[x] = ((y, conditional weight), ...)

    def reconstitute(self) -> tuple:
        """Source weights recovered as target weight times fiber weight."""
        tw = self.factor.target.space.weights
        out = [Fraction(0)] * len(self.factor.source.space)
        for x, fib in enumerate(self.fibers):
            for y, c in fib:
                out[y] = tw[x] * c
        return tuple(out)


def disintegrate(pi: FactorMap) -> Disintegration:
    """Fiber distributions nu(y) / mu(pi(y)) over each target atom."""
    sw, tw = pi.source.space.weights, pi.target.space.weights
    fibers = [[] for _ in tw]
    for y, x in enumerate(pi.mapping):
        fibers[x].append(y)
    out = []
    for x, fib in enumerate(fibers):
        if sum((sw[y] for y in fib), Fraction(0)) != tw[x]:
            raise PreconditionError(f"map is not measure-preserving at target atom {x}", {"atom": x})
        out.append(tuple((y, sw[y] / tw[x]) for y in fib))
    return Disintegration(pi, tuple(out))


@dataclass(frozen=True)
class JoinResult:
    action: Action
    pairs: tuple
    p1: FactorMap
    p2: FactorMap
    base: Action
    pi1: FactorMap
    pi2: FactorMap


def _pad_names(a: Action, b: Action) -> tuple:
    return a.names if a.k >= b.k else b.names


def independent_joining(alpha: Action, beta: Action, xi: Action, pi1: FactorMap, pi2: FactorMap) -> JoinResult:
    """Relative independent joining of alpha and beta over the common factor xi."""
    for name, pi, src in (("pi1", pi1, alpha), ("pi2", pi2, beta)):
        if pi.source != src or pi.target != xi:
            raise DomainMismatchError(f"{name} does not map onto the common factor")
        verdict = is_factor_map(pi)
        if not verdict:
            raise PreconditionError(f"{name} is not a factor map", verdict.counterexample)
    lam = xi.space.weights
    mu, nu = alpha.space.weights, beta.space.weights
    f1, f2 = pi1.fibers(), pi2.fibers()
    pairs = sorted((x, y) for z in range(len(lam)) for x in f1[z] for y in f2[z])
    index = {p: i for i, p in enumerate(pairs)}
    weights = tuple(mu[x] * nu[y] / lam[pi1.mapping[x]] for x, y in pairs)
    labels = tuple(f"({alpha.space.labels[x]},{beta.space.labels[y]})" for x, y in pairs)
    space = AtomSpace(weights, labels)
    k = max(alpha.k, beta.k)
    perms = tuple(tuple(index[(alpha.apply_letter(g, x), beta.apply_letter(g, y))] for x, y in pairs)
                  for g in range(1, k + 1))
    zeta = Action(space, _pad_names(alpha, beta)[:k], perms)
    p1 = FactorMap(zeta, alpha, tuple(x for x, _ in pairs))
    p2 = FactorMap(zeta, beta, tuple(y for _, y in pairs))
    for p in (p1, p2):
        verdict = is_factor_map(p)
        if not verdict:
            raise InvariantViolation(f"projection is not a factor map: {verdict.counterexample}")
    return JoinResult(zeta, tuple(pairs), p1, p2, xi, pi1, pi2)


def join_over_irs(alpha: Action, beta: Action) -> JoinResult:
    """Joining over the stabilizer factor; every joined atom keeps its stabilizer."""
    ia, ib = empirical_irs(alpha), empirical_irs(beta)
    if not irs_equal(ia, ib):
        cls, ma, mb = distinguishing_class(ia, ib)
        raise PreconditionError("actions have different empirical IRS",
                                {"class": cls.encode(), "mass_alpha": ma, "mass_beta": mb})
    xi, pi1 = irs_factor(alpha)
    index = {c: i for i, c in enumerate(ia.classes())}
    cls_b = rooted_classes(beta)
    pi2 = FactorMap(beta, xi, tuple(index[c] for c in cls_b))
    res = independent_joining(alpha, beta, xi, pi1, pi2)
    cls_a = rooted_classes(alpha)
    cls_z = rooted_classes(res.action)
    for i, (x, y) in enumerate(res.pairs):
        if not (cls_z[i] == cls_a[x] == cls_b[y]):
            raise InvariantViolation(f"stabilizer identity fails at joined atom {i}")
    return res


@dataclass(frozen=True)
class Amalgam:
    join: JoinResult
    blocks1: tuple
    blocks2: tuple

    @property
    def action(self) -> Action:
        return self.join.action

    def embed_left(self, event: Event) -> Event:
        if event.space != self.join.p1.target.space:
            raise DomainMismatchError("event is not on the first model")
        return self.join.p1.preimage(event)

    def embed_right(self, event: Event) -> Event:
        if event.space != self.join.p2.target.space:
            raise DomainMismatchError("event is not on the second model")
        return self.join.p2.preimage(event)


def _block_index(action: Action, blocks: Sequence[Event], side: str) -> list:
    where = [None] * len(action.space)
    for j, b in enumerate(blocks):
        if b.space != action.space:
            raise DomainMismatchError(f"{side} block {j} is not on the {side} model")
        for x in b.atoms:
            if where[x] is not None:
                raise PreconditionError(f"{side} blocks overlap", {"atom": x})
            where[x] = j
    missing = [x for x, j in enumerate(where) if j is None]
    if missing:
        raise PreconditionError(f"{side} blocks do not cover the model", {"atoms": missing})
    return where


def _union_of_blocks(event: Event, blocks: Sequence[Event]):
    chosen = []
    for j, b in enumerate(blocks):
        inter = b.atoms & event.atoms
        if inter and inter != b.atoms:
            return None
        if inter:
            chosen.append(j)
    return chosen


def amalgamate(M1: Action, M2: Action, blocks1: Sequence[Event], blocks2: Sequence[Event],
               required: Sequence[Word] = ()) -> Amalgam:
    """Relative independent joining of M1 and M2 over a common block algebra.

    ``blocks1[j]`` and ``blocks2[j]`` are the two copies of the j-th atom of
    the common substructure.  The correspondence must preserve measure and be
    permuted identically by every generator; each required word must have a
    support that is the same union of common blocks on both sides.
    """
    if len(blocks1) != len(blocks2):
        raise PreconditionError("block lists differ in length")
    w1 = _block_index(M1, blocks1, "first")
    w2 = _block_index(M2, blocks2, "second")
    lam = []
    for j, (b1, b2) in enumerate(zip(blocks1, blocks2)):
        if b1.measure != b2.measure:
            raise PreconditionError("block measures differ", {"block": j, "first": b1.measure,
                                                              "second": b2.measure})
        lam.append(b1.measure)
    k = max(M1.k, M2.k)
    sigma = []
    for g in range(1, k + 1):
        row = []
        for j, (b1, b2) in enumerate(zip(blocks1, blocks2)):
            t1 = {w1[M1.apply_letter(g, x)] for x in b1.atoms}
            t2 = {w2[M2.apply_letter(g, x)] for x in b2.atoms}
            if len(t1) != 1 or t1 != t2:
                raise PreconditionError("block correspondence is not equivariant",
                                        {"generator": g, "block": j, "first_images": sorted(t1),
                                         "second_images": sorted(t2)})
            row.append(t1.pop())
        sigma.append(tuple(row))
    for w in required:
        u1 = _union_of_blocks(support_event(M1, w), blocks1)
        u2 = _union_of_blocks(support_event(M2, w), blocks2)
        if u1 is None or u2 is None or u1 != u2:
            raise PreconditionError("required support is not the same union of common blocks",
                                    {"word": list(w.letters), "first": u1, "second": u2})
    base = Action(AtomSpace(tuple(lam)), _pad_names(M1, M2)[:k], tuple(sigma))
    pi1 = FactorMap(M1.with_generators(k), base, tuple(w1))
    pi2 = FactorMap(M2.with_generators(k), base, tuple(w2))
    res = independent_joining(M1.with_generators(k), M2.with_generators(k), base, pi1, pi2)
    am = Amalgam(res, tuple(blocks1), tuple(blocks2))
    for j, (b1, b2) in enumerate(zip(blocks1, blocks2)):
        if am.embed_left(Event(pi1.source.space, b1.atoms)) != am.embed_right(Event(pi2.source.space, b2.atoms)):
            raise InvariantViolation(f"embeddings disagree on common block {j}")
    for w in required:
        s = support_event(am.action, w)
        if s != am.embed_left(Event(M1.space, support_event(M1, w).atoms)) or \
                s != am.embed_right(Event(M2.space, support_event(M2, w).atoms)):
            raise InvariantViolation(f"support of required word {w.letters} is not preserved")
    return am
