"""Approximate conjugacy witnesses built from bicolored graphings.

The factor step takes a factor map pi from beta onto alpha with equal
empirical IRS.  Stabilizers then agree along pi, so pi is a bijection on
every beta-orbit.  Each alpha-atom x is split into one piece per beta-orbit
lying over the orbit of x; alpha acts on the pieces through the first
coordinate.  After cutting Z from the alpha graphing and pi^-1(Z) from the
beta graphing, components are matched class by class and transported through
their canonical forms.  Words can only fail to commute at atoms incident to
Z, so the error is at most mu(V_inc(Z)) <= 2 mu_E(Z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .action import Action, FactorMap, Word, evaluate_word, is_factor_map
from .canonical import ColoredGraph, canonical_colored_component
from .errors import DomainMismatchError, InvariantViolation, PreconditionError
from .graphing import (
    EdgeSet,
    Graphing,
    build_schreier,
    components,
    edge_measure,
    hyperfinite_decomposition,
    incident_vertices,
)
from .irs import distinguishing_class, empirical_irs, irs_equal
from .joining import join_over_irs
from .measure import AtomSpace, Event, Refinement, as_fraction

MAX_COMPONENT = 1024


@dataclass(frozen=True)
class ConjugacyWitness:
    alpha_hat: Action
    beta_hat: Action
    ref_alpha: Refinement
    ref_beta: Refinement
    rho: tuple  # refined alpha atom -> refined beta atom
    error: Event  # on alpha_hat.space
    measured: Fraction
    bound: Fraction
    mu_E: Fraction
    words: tuple
    params: tuple = ()  # ((A_hat, B_hat), ...)
    cut: tuple = field(default=(), repr=False)  # undirected cut edges on the alpha side

    @property
    def exact(self) -> bool:
        return not self.error.atoms


def _lift_action(action: Action, ref: Refinement, piece_of: Sequence) -> Action:
    """Action on refined atoms moving the parent and keeping the piece index."""
    index = {(p, j): r for r, (p, j) in enumerate(zip(ref.parent, piece_of))}
    perms = tuple(tuple(index[(perm[p], j)] for p, j in zip(ref.parent, piece_of)) for perm in action.perms)
    return Action(ref.refined, action.names, perms)


def _trivial_refinement(space: AtomSpace) -> Refinement:
    return Refinement(space, space, tuple(space.atoms))


def _loop_flags(action: Action, words) -> list:
    perms = [(w.letters, evaluate_word(action, w)) for w in words]
    return [tuple(l for l, p in perms if p[x] == x) for x in action.space.atoms]


def _component_graph(g: Graphing, comp, Z: EdgeSet, loops) -> ColoredGraph:
    members = set(comp)
    cut = Z.pairs
    edges = tuple((x, y, g.edges[(x, y)]) for x in comp for y in g.neighbors(x)
                  if y in members and (x, y) not in cut)
    vcols = tuple((g.vertex_colors[x], loops[x]) for x in comp)
    return ColoredGraph(tuple(comp), vcols, edges)


def _choose_cut(g: Graphing, Z, M, budget) -> EdgeSet:
    if Z is not None:
        if isinstance(Z, EdgeSet):
            if Z.graphing is not g:
                return g.edge_set(Z.pairs)
            return Z
        return g.edge_set(Z)
    if M is not None:
        return hyperfinite_decomposition(g, M, "auto").Z
    if budget is None or budget == 0 or g.degree == 0:
        return g.edge_set(())
    # smallest component bound whose cut fits under budget / 2d
    target = budget / (2 * g.degree)
    largest = max((len(c) for c in components(g)), default=1)
    for m in range(1, largest + 1):
        cert = hyperfinite_decomposition(g, m, "auto")
        if cert.mu_E < target:
            return cert.Z
    return g.edge_set(())


def _error_event(alpha_hat: Action, beta_hat: Action, rho: Sequence[int], words) -> Event:
    bad = set()
    for w in words:
        pa, pb = evaluate_word(alpha_hat, w), evaluate_word(beta_hat, w)
        for r in alpha_hat.space.atoms:
            if rho[pa[r]] != pb[rho[r]]:
                bad.add(r)
    return Event(alpha_hat.space, frozenset(bad))


def _check_params(alpha: Action, beta: Action, pi: FactorMap, params) -> tuple:
    out = []
    for i, (A, B) in enumerate(params):
        if A.space != alpha.space or B.space != beta.space:
            raise DomainMismatchError(f"parameter pair {i} is not on the two spaces")
        if pi.preimage(A) != B:
            raise PreconditionError("parameter preimage condition fails",
                                    {"index": i, "atoms": sorted(pi.preimage(A).atoms ^ B.atoms)})
        out.append((A, B))
    return tuple(out)


def conjugacy_witness_factor(alpha: Action, beta: Action, pi: FactorMap, params=(), words: Sequence[Word] = (),
                             Z=None, M: int = None, epsilon=None) -> ConjugacyWitness:
    """Witness for alpha ~ beta built from the factor map pi: beta -> alpha.

    The cut is taken from ``Z`` (an EdgeSet or pairs on the alpha graphing),
    else from a decomposition with component bound ``M``, else sized so that
    mu_E(Z) < epsilon / 2d; with none of these Z is empty and the witness is
    exact.  An empty word set means the generators.
    """
    if pi.source != beta or pi.target != alpha:
        raise DomainMismatchError("pi must map beta onto alpha")
    verdict = is_factor_map(pi)
    if not verdict:
        raise PreconditionError("pi is not a factor map", verdict.counterexample)
    ia, ib = empirical_irs(alpha), empirical_irs(beta)
    if not irs_equal(ia, ib):
        cls, ma, mb = distinguishing_class(ia, ib)
        raise PreconditionError("actions have different empirical IRS",
                                {"class": cls.encode(), "mass_alpha": ma, "mass_beta": mb})
    params = _check_params(alpha, beta, pi, params)
    budget = None if epsilon is None else as_fraction(epsilon)
    words = tuple(words) or tuple(Word((i,)) for i in range(1, max(alpha.k, beta.k) + 1))

    ga = build_schreier(alpha, words, [A for A, _ in params])
    gb = build_schreier(beta, words, [B for _, B in params])
    S = ga.words
    Za = _choose_cut(ga, Z, M, budget)
    m = pi.mapping
    Zb = gb.edge_set([(y, z) for (y, z) in gb.edges if (m[y], m[z]) in Za.pairs], close=False)
    mu_E = edge_measure(ga, Za)[0]
    V = incident_vertices(ga, Za)

    # pieces of x: one per beta-orbit over the orbit of x
    orbit_a = {}
    for j, orb in enumerate(alpha.orbits()):
        for x in orb:
            orbit_a[x] = j
    over = {}  # alpha orbit index -> list of beta orbits (sorted by min atom)
    orbit_b = {}
    for orb in beta.orbits():
        images = {m[y] for y in orb}
        if len(images) != len(orb):
            raise InvariantViolation("pi is not injective on a beta-orbit despite equal IRS")
        over.setdefault(orbit_a[m[orb[0]]], []).append(orb)
        for y in orb:
            orbit_b[y] = orb
    nu = beta.space.weights
    parent, piece_of, pweights, labels = [], [], [], []
    sheet = {}  # (x, beta orbit min) -> refined atom
    for x in alpha.space.atoms:
        pieces = over[orbit_a[x]]
        for j, orb in enumerate(pieces):
            sheet[(x, orb[0])] = len(parent)
            parent.append(x)
            piece_of.append(j)
            pweights.append(nu[orb[0]])
            labels.append(alpha.space.labels[x] if len(pieces) == 1 else f"{alpha.space.labels[x]}.{j}")
    ref_a = Refinement(alpha.space, AtomSpace(tuple(pweights), tuple(labels)), tuple(parent))
    alpha_hat = _lift_action(alpha, ref_a, piece_of)
    ref_b = _trivial_refinement(beta.space)
    beta_hat = beta

    # canonical forms of alpha components; beta components reuse them through pi
    loops = _loop_flags(alpha, S)
    loops_b = _loop_flags(beta, S)
    comps_a = components(ga, Za)
    canon = {}
    for C in comps_a:
        cls, kappa = canonical_colored_component(_component_graph(ga, C, Za, loops), max_size=MAX_COMPONENT)
        canon[C[0]] = (cls, kappa, C)
    comp_of = {}
    for C in comps_a:
        for x in C:
            comp_of[x] = C[0]

    by_class_a, by_class_b = {}, {}
    for C in comps_a:
        cls, _, _ = canon[C[0]]
        for orb in over[orbit_a[C[0]]]:
            by_class_a.setdefault(cls, []).append((nu[orb[0]], C[0], orb[0]))
    for D in components(gb, Zb):
        root = m[D[0]]
        cls, kappa, C = canon[comp_of[root]]
        if len(D) != len(C) or {m[y] for y in D} != set(C):
            raise InvariantViolation(f"beta component at {D[0]} is not a copy of its image")
        # pi must carry D onto C as a colored graph
        for y in D:
            if loops_b[y] != loops[m[y]]:
                raise InvariantViolation(f"loop flags differ at beta atom {y}")
            for z in gb.neighbors(y):
                if (y, z) not in Zb.pairs and gb.edges[(y, z)] != ga.edges.get((m[y], m[z])):
                    raise InvariantViolation(f"edge ({y},{z}) does not map onto an edge of the same color")
        pos_to_y = {kappa[m[y]]: y for y in D}
        by_class_b.setdefault(cls, []).append((nu[D[0]], D[0], pos_to_y))

    rho = [None] * len(parent)
    for cls, items_a in by_class_a.items():
        items_b = by_class_b.get(cls, [])
        items_a.sort()
        items_b.sort(key=lambda t: (t[0], t[1]))
        if [w for w, _, _ in items_a] != [w for w, _, _ in items_b]:
            raise PreconditionError("component classes have different weight profiles",
                                    {"class": cls.encode()[:200], "alpha": len(items_a), "beta": len(items_b)})
        for (_, croot, orb_min), (_, _, pos_to_y) in zip(items_a, items_b):
            _, kappa, C = canon[croot]
            for x in C:
                rho[sheet[(x, orb_min)]] = pos_to_y[kappa[x]]
    if set(by_class_b) - set(by_class_a):
        raise PreconditionError("beta has a component class absent from alpha")
    rho = tuple(rho)

    error = _error_event(alpha_hat, beta_hat, rho, S)
    lifted_V = ref_a.lift(V)
    if not error.atoms <= lifted_V.atoms:
        raise InvariantViolation("disagreement escapes the atoms incident to the cut")
    bound = min(V.measure, 2 * mu_E)
    witness = ConjugacyWitness(
        alpha_hat, beta_hat, ref_a, ref_b, rho, error, error.measure, bound, mu_E, S,
        tuple((ref_a.lift(A), ref_b.lift(B)) for A, B in params),
        tuple(sorted((x, y) for (x, y) in Za.pairs if x < y)),
    )
    _assert_witness(witness)
    return witness


def _assert_witness(w: ConjugacyWitness):
    hat_a, hat_b = w.alpha_hat.space, w.beta_hat.space
    if sorted(w.rho) != list(hat_b.atoms) or len(w.rho) != len(hat_a):
        raise InvariantViolation("rho is not a bijection")
    for r, s in enumerate(w.rho):
        if hat_a.weights[r] != hat_b.weights[s]:
            raise InvariantViolation(f"rho changes the weight of refined atom {r}")
    for i, (A, B) in enumerate(w.params):
        if frozenset(w.rho[r] for r in A.atoms) != B.atoms:
            raise InvariantViolation(f"rho does not carry parameter {i} onto its partner")
    if not w.measured <= w.bound <= 2 * w.mu_E and not (w.measured == w.bound == 0):
        raise InvariantViolation(f"bound chain fails: {w.measured} <= {w.bound} <= {2 * w.mu_E}")


def approximate_conjugacy(alpha: Action, beta: Action, words: Sequence[Word] = (), epsilon=None,
                          exact: bool = None, M: int = None) -> ConjugacyWitness:
    """Witness that alpha and beta are approximately conjugate on the words given.

    Both actions are compared with their joining over the IRS; the two factor
    witnesses are composed through the joined space.  Exact mode (no epsilon,
    no M) cuts nothing, and the result commutes with every word everywhere.
    A component bound M forces the same decomposition bound in both steps.
    """
    if exact is None:
        exact = epsilon is None and M is None
    k = max(alpha.k, beta.k)
    alpha, beta = alpha.with_generators(k), beta.with_generators(k)
    ia, ib = empirical_irs(alpha), empirical_irs(beta)
    if not irs_equal(ia, ib):
        cls, ma, mb = distinguishing_class(ia, ib)
        raise PreconditionError("actions have different empirical IRS",
                                {"class": cls.encode(), "mass_alpha": ma, "mass_beta": mb})
    words = tuple(words) or tuple(alpha.generator_words(False))
    half = None if exact or epsilon is None else as_fraction(epsilon) / 2
    joined = join_over_irs(alpha, beta)
    M = None if exact else M
    w1 = conjugacy_witness_factor(alpha, joined.action, joined.p1, (), words, M=M, epsilon=half)
    w2 = conjugacy_witness_factor(beta, joined.action, joined.p2, (), words, M=M, epsilon=half)
    inv2 = [None] * len(w2.rho)
    for r, z in enumerate(w2.rho):
        inv2[z] = r
    rho = tuple(inv2[z] for z in w1.rho)
    error = _error_event(w1.alpha_hat, w2.alpha_hat, rho, w1.words)
    allowed = set(w1.error.atoms) | {r for r, z in enumerate(w1.rho) if inv2[z] in w2.error.atoms}
    if not error.atoms <= allowed:
        raise InvariantViolation("composite error escapes the union of the two error events")
    bound = w1.bound + w2.bound
    if error.measure > bound:
        raise InvariantViolation(f"composite error {error.measure} exceeds {bound}")
    witness = ConjugacyWitness(w1.alpha_hat, w2.alpha_hat, w1.ref_alpha, w2.ref_alpha, rho, error,
                               error.measure, bound, w1.mu_E + w2.mu_E, w1.words)
    _assert_witness(witness)
    if exact and witness.error.atoms:
        raise InvariantViolation("exact mode produced a disagreement")
    return witness


@dataclass
class VerificationReport:
    ok: bool
    issues: list
    measured: Fraction = Fraction(0)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "issues": self.issues,
                "measured": f"{self.measured.numerator}/{self.measured.denominator}"}


def verify_witness(w: ConjugacyWitness, alpha: Action, beta: Action, words: Sequence[Word] = None,
                   params=()) -> VerificationReport:
    """Recompute every property of a witness from scratch; never raises on a bad witness."""
    issues = []
    k = max(alpha.k, beta.k)
    alpha, beta = alpha.with_generators(k), beta.with_generators(k)
    for name, ref, base, hat in (("alpha", w.ref_alpha, alpha, w.alpha_hat), ("beta", w.ref_beta, beta, w.beta_hat)):
        if ref.source != base.space:
            issues.append({"check": "refinement", "side": name, "detail": "refines another space"})
            continue
        if hat.space != ref.refined:
            issues.append({"check": "refinement", "side": name, "detail": "action is not on the refined space"})
            continue
        sums = [Fraction(0)] * len(base.space)
        for r, p in enumerate(ref.parent):
            sums[p] += ref.refined.weights[r]
        for x, s in enumerate(sums):
            if s != base.space.weights[x]:
                issues.append({"check": "refinement", "side": name, "atom": x, "fiber_weight": str(s)})
        v = is_factor_map(FactorMap(hat.with_generators(k), base, ref.parent))
        if not v:
            issues.append({"check": "projection", "side": name, "detail": {a: str(b) for a, b in v.counterexample.items()}})
    if issues:
        return VerificationReport(False, issues)

    na, nb = len(w.alpha_hat.space), len(w.beta_hat.space)
    rho = list(w.rho)
    seen = {}
    bijective = len(rho) == na == nb
    if not bijective:
        issues.append({"check": "bijection", "detail": f"{len(rho)} entries for {na} and {nb} atoms"})
    for r, s in enumerate(rho):
        if not isinstance(s, int) or not 0 <= s < nb:
            issues.append({"check": "bijection", "atom": r, "detail": "image outside the target"})
            bijective = False
            continue
        if s in seen:
            issues.append({"check": "bijection", "atom": r, "detail": f"shares image {s} with atom {seen[s]}"})
            bijective = False
        seen[s] = r
        if r < na and w.alpha_hat.space.weights[r] != w.beta_hat.space.weights[s]:
            issues.append({"check": "weight", "atom": r, "alpha": str(w.alpha_hat.space.weights[r]),
                           "beta": str(w.beta_hat.space.weights[s])})
    if not bijective:
        return VerificationReport(False, issues)

    for i, (A, B) in enumerate(params):
        Ah, Bh = w.ref_alpha.lift(A), w.ref_beta.lift(B)
        image = frozenset(rho[r] for r in Ah.atoms)
        if image != Bh.atoms:
            issues.append({"check": "parameter", "index": i, "atoms": sorted(image ^ Bh.atoms)})

    words = tuple(w.words) if words is None else tuple(words)
    per_word = []
    bad = set()
    ah, bh = w.alpha_hat.with_generators(k), w.beta_hat.with_generators(k)
    for word in words:
        pa, pb = evaluate_word(ah, word), evaluate_word(bh, word)
        dis = {r for r in range(na) if rho[pa[r]] != pb[rho[r]]}
        bad |= dis
        per_word.append((word, dis))
    measured = w.alpha_hat.space.measure(bad)
    if measured > w.bound:
        issues.append({"check": "bound", "measured": str(measured), "claimed": str(w.bound)})
    if w.bound > 2 * w.mu_E and w.bound != 0:
        issues.append({"check": "bound", "claimed": str(w.bound), "edge_measure": str(w.mu_E)})
    if words == tuple(w.words) and frozenset(bad) != w.error.atoms:
        issues.append({"check": "error event", "stored": sorted(w.error.atoms), "recomputed": sorted(bad)})
    if words == tuple(w.words) and measured != w.measured:
        issues.append({"check": "measured", "stored": str(w.measured), "recomputed": str(measured)})
    return VerificationReport(not issues, issues, measured)
