"""The twelve acceptance criteria, each at its exact tolerance and time limit.

Every test records one PASS/FAIL line; conftest prints them together at the
end of the run.  Oracles live in oracles.py and never call the code under test.
"""

import random
import time
from fractions import Fraction as Q
from itertools import combinations

import conftest
from conftest import act, amalgam_instance, amalgam_weights_by_disintegration, cyc
from oracles import (
    all_maximal_a0,
    atom_automorphism_exists,
    full_independence,
    min_cut_cycle,
    product_join,
    sup_uniform_distance,
    three_term,
    tp_by_matching,
)
from pmplab import generators
from pmplab.action import Word, fixed_event, is_factor_map, support_event, support_witness, uniform_distance
from pmplab.canonical import rooted_classes
from pmplab.conjugacy import approximate_conjugacy, verify_witness
from pmplab.graphing import (
    build_schreier,
    cycle_dp_cut,
    edge_measure,
    exhaustive_cut,
    hyperfinite_decomposition,
    incident_vertices,
)
from pmplab.irs import CylinderQuery, empirical_irs, irs_cylinder, irs_equal
from pmplab.joining import amalgamate, join_over_irs
from pmplab.logic import check_theta_axioms, qe_failure_demo, theta_sup_exhaustive, theta_value
from pmplab.measure import AtomSpace, Subalgebra, is_independent, tp_equal


def record(number, title, failures, elapsed, limit=None):
    ok = not failures and (limit is None or elapsed < limit)
    timing = f"{elapsed:.2f}s" + (f" < {limit}s" if limit is not None else "")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} ({timing})"
    if failures:
        line += f"; first failure: {failures[0]}"
    conftest.ACCEPTANCE_LINES.append((number, line))
    print(line)
    assert not failures, failures[:5]
    assert ok, f"took {elapsed:.2f}s, limit {limit}s"


def grouped_weights(rng, n, values=3):
    """Random weights with a few distinct values, so weight-preserving permutations are plentiful."""
    raw = [rng.randint(1, values) for _ in range(n)]
    total = sum(raw)
    return [Q(r, total) for r in raw]


def weight_preserving_perm(rng, weights):
    groups = {}
    for x, w in enumerate(weights):
        groups.setdefault(w, []).append(x)
    perm = [None] * len(weights)
    for members in groups.values():
        img = members[:]
        rng.shuffle(img)
        for x, y in zip(members, img):
            perm[x] = y
    return tuple(perm)


def test_criterion_01_exact_pipeline():
    failures = []
    start = time.perf_counter()
    for seed in range(200):
        alpha, beta = generators.equal_irs_pair(seed)
        w = approximate_conjugacy(alpha, beta)
        if not (w.exact and w.measured == 0 and verify_witness(w, alpha, beta).ok):
            failures.append(seed)
    record(1, "exact conjugacy on 200 equal-IRS pairs", failures, time.perf_counter() - start, 10)


def test_criterion_02_certified_bound():
    failures = []
    rng = random.Random(2)
    start = time.perf_counter()
    for _ in range(99):
        seed, M = rng.randrange(10 ** 6), rng.randint(1, 6)
        alpha, beta = generators.equal_irs_pair(seed, max_atoms=30)
        w = approximate_conjugacy(alpha, beta, M=M)
        if not (w.measured <= w.bound <= 2 * w.mu_E and verify_witness(w, alpha, beta).ok):
            failures.append((seed, M))
    c = cyc(100)
    w = approximate_conjugacy(c, c, M=20)
    if not (w.measured <= w.bound <= 2 * w.mu_E and w.bound <= Q(1, 5) and verify_witness(w, c, c).ok):
        failures.append(("C100", w.bound))
    record(2, "measured <= bound <= 2 mu_E on 100 forced-M instances", failures, time.perf_counter() - start, 10)


def test_criterion_03_edge_measure_sandwich():
    failures = []
    rng = random.Random(3)
    letters = [1, -1, 2, -2]
    start = time.perf_counter()
    for i in range(1000):
        n, k = rng.randint(1, 9), rng.randint(1, 2)
        a = generators.random_action(n, k, rng.randrange(10 ** 6))
        words = [Word(tuple(rng.choice(letters[: 2 * k]) for _ in range(rng.randint(1, 2))))
                 for _ in range(rng.randint(1, 2))]
        g = build_schreier(a, words)
        und = g.undirected_edges()
        Z = g.edge_set(rng.sample(und, rng.randint(0, len(und))))
        mu_e, mu_l, mu_r = edge_measure(g, Z)
        V = incident_vertices(g, Z).measure
        if not (mu_l == mu_r and V / 2 <= mu_e <= g.degree * V):
            failures.append(i)
    record(3, "edge-measure sandwich and mu_l = mu_r on 1000 pairs", failures, time.perf_counter() - start, 5)


def test_criterion_04_support_lemma():
    failures = []
    rng = random.Random(4)
    start = time.perf_counter()
    for i in range(500):
        n = rng.randint(1, 50)
        weights = grouped_weights(rng, n)
        space = AtomSpace(tuple(weights))
        perm = weight_preserving_perm(rng, weights)
        moved = frozenset(x for x in range(n) if perm[x] != x)
        for _ in range(3):
            order = list(range(n))
            rng.shuffle(order)
            sw = support_witness(space, perm, order)
            if three_term(perm, sw.a0.atoms) != moved or sw.support.atoms != moved:
                failures.append((i, "order"))
        if n <= 10 and any(three_term(perm, a0) != moved for a0 in all_maximal_a0(perm)):
            failures.append((i, "exhaustive"))
    record(4, "support lemma on 500 weight-preserving permutations", failures, time.perf_counter() - start, 10)


def test_criterion_05_uniform_metric():
    failures = []
    rng = random.Random(5)
    start = time.perf_counter()
    for i in range(300):
        n = rng.randint(1, 12)
        weights = grouped_weights(rng, n)
        p, q = weight_preserving_perm(rng, weights), weight_preserving_perm(rng, weights)
        if uniform_distance(AtomSpace(tuple(weights)), p, q) != sup_uniform_distance(weights, p, q):
            failures.append(i)
    record(5, "uniform-metric closed form = sup over all events, 300 pairs", failures,
           time.perf_counter() - start, 10)


def test_criterion_06_join_over_irs():
    failures = []
    rng = random.Random(6)
    start = time.perf_counter()
    for _ in range(100):
        seed = rng.randrange(10 ** 6)
        alpha, beta = generators.equal_irs_pair(seed, max_atoms=30)
        theta = empirical_irs(alpha)
        res = join_over_irs(alpha, beta)
        ca, cb, cz = rooted_classes(alpha), rooted_classes(beta), rooted_classes(res.action)
        ok = all(cz[i] == ca[x] == cb[y] for i, (x, y) in enumerate(res.pairs))
        ok = ok and irs_equal(empirical_irs(res.action), theta)
        ok = ok and bool(is_factor_map(res.p1)) and bool(is_factor_map(res.p2))
        oracle = product_join(alpha.space.weights, beta.space.weights, res.pi1.mapping, res.pi2.mapping,
                              res.base.space.weights)
        ok = ok and dict(zip(res.pairs, res.action.space.weights)) == {p: w for p, w in oracle.items() if w}
        if not ok:
            failures.append(seed)
    record(6, "joining over the IRS on 100 equal-IRS pairs", failures, time.perf_counter() - start, 10)


def test_criterion_07_amalgamation():
    failures = []
    start = time.perf_counter()
    for seed in range(50):
        m1, m2, b1, b2, required = amalgam_instance(seed)
        am = amalgamate(m1, m2, b1, b2, required)
        ok = dict(zip(am.join.pairs, am.action.space.weights)) == amalgam_weights_by_disintegration(am)
        for w in required:
            s = support_event(am.action, w)
            ok = ok and s == am.embed_left(support_event(m1, w)) == am.embed_right(support_event(m2, w))
        if not ok:
            failures.append(seed)
    record(7, "amalgam weights and supports on 50 instances", failures, time.perf_counter() - start, 5)


def _random_partition(rng, n, parts):
    labels = [rng.randrange(parts) for _ in range(n)]
    groups = {}
    for x, l in enumerate(labels):
        groups.setdefault(l, set()).add(x)
    return list(groups.values())


def _product_block_case(rng):
    """Blocks that are grids rows x cols; A-events are row unions, B-events column unions."""
    shapes = rng.choice([[(2, 2)], [(2, 3)], [(3, 3)], [(2, 2), (2, 2)], [(2, 2), (2, 3)], [(2, 2), (1, 3)]])
    cells, blocks, rows_of, cols_of = [], [], [], []
    for b, (r, c) in enumerate(shapes):
        u = [rng.randint(1, 3) for _ in range(r)]
        v = [rng.randint(1, 3) for _ in range(c)]
        mass = rng.randint(1, 3)
        members = []
        for i in range(r):
            for j in range(c):
                members.append(len(cells))
                cells.append(Q(mass * u[i] * v[j], sum(u) * sum(v)))
                rows_of.append((b, i))
                cols_of.append((b, j))
        blocks.append(members)
    total = sum(cells)
    space = AtomSpace(tuple(w / total for w in cells))
    n = len(cells)
    rows = sorted(set(rows_of))
    cols = sorted(set(cols_of))

    def union(labels, pick):
        chosen = {lab for lab in labels if pick(lab)}
        return space.event(x for x in range(n) if (rows_of if labels is rows else cols_of)[x] in chosen)

    A = [union(rows, lambda _: rng.random() < 0.5) for _ in range(rng.randint(1, 2))]
    B = [union(cols, lambda _: rng.random() < 0.5) for _ in range(rng.randint(1, 2))]
    return space, A, B, Subalgebra(space, blocks)


def test_criterion_08_independence_and_types():
    failures = []
    rng = random.Random(8)
    start = time.perf_counter()
    independent_seen = 0
    # independence: random events, then product-structured cases that are independent by construction
    for i in range(300):
        n = rng.randint(1, 10)
        space = AtomSpace(tuple(grouped_weights(rng, n)))
        A = [space.event(x for x in range(n) if rng.random() < 0.5) for _ in range(rng.randint(1, 2))]
        B = [space.event(x for x in range(n) if rng.random() < 0.5) for _ in range(rng.randint(1, 2))]
        C = Subalgebra(space, _random_partition(rng, n, rng.randint(1, 3)))
        got = bool(is_independent(space, A, B, C))
        independent_seen += got
        if got != full_independence(space.weights, [a.atoms for a in A], [b.atoms for b in B], C.blocks):
            failures.append(("indep", i))
    for i in range(60):
        space, A, B, C = _product_block_case(rng)
        got = bool(is_independent(space, A, B, C))
        independent_seen += got
        if not got or not full_independence(space.weights, [a.atoms for a in A], [b.atoms for b in B], C.blocks):
            failures.append(("product", i))
    # types: random tuples and tuples moved by a block- and weight-preserving permutation
    for i in range(200):
        n = rng.randint(1, 8)
        uniform = i % 2 == 0
        weights = [Q(1, n)] * n if uniform else grouped_weights(rng, n)
        space = AtomSpace(tuple(weights))
        parts = _random_partition(rng, n, rng.randint(1, 2))
        C = Subalgebra(space, parts)
        a_tuple = [frozenset(x for x in range(n) if rng.random() < 0.5) for _ in range(rng.randint(1, 2))]
        if i % 4 < 2:
            block = {x: j for j, c in enumerate(parts) for x in c}
            perm = weight_preserving_perm(rng, [(weights[x], block[x]) for x in range(n)])
            b_tuple = [frozenset(perm[x] for x in a) for a in a_tuple]
        else:
            b_tuple = [frozenset(x for x in range(n) if rng.random() < 0.5) for _ in a_tuple]
        got = bool(tp_equal(space, [space.event(a) for a in a_tuple], [space.event(b) for b in b_tuple], C))
        if got != tp_by_matching(weights, a_tuple, b_tuple, C.blocks):
            failures.append(("tp-matching", i))
        if uniform and got != atom_automorphism_exists(weights, a_tuple, b_tuple, C.blocks):
            failures.append(("tp-automorphism", i))
    if independent_seen < 60:
        failures.append(("too few independent cases", independent_seen))
    record(8, "independence and type oracles on a fixed corpus", failures, time.perf_counter() - start, 30)


def test_criterion_09_inclusion_exclusion():
    failures = []
    rng = random.Random(9)
    letters = [1, -1, 2, -2]
    start = time.perf_counter()
    for i in range(200):
        a = generators.random_weighted_action(rng.randrange(10 ** 6), max_atoms=10, max_k=2)
        pool = list(dict.fromkeys(Word(tuple(rng.choice(letters) for _ in range(rng.randint(0, 3))))
                                  for _ in range(5)))
        cut = rng.randint(0, len(pool))
        F, G = pool[:cut], pool[cut:]
        fixed = {w: fixed_event(a, w).atoms for w in pool}
        signed = Q(0)
        for r in range(len(G) + 1):
            for S in combinations(G, r):
                meet = frozenset(a.space.atoms)
                for w in list(F) + list(S):
                    meet &= fixed[w]
                signed += (-1) ** r * sum((a.space.weights[x] for x in meet), Q(0))
        if irs_cylinder(a, CylinderQuery(F, G)) != signed:
            failures.append(i)
    record(9, "cylinders equal the signed sum of F-only cylinders, 200 queries", failures,
           time.perf_counter() - start)


def test_criterion_10_qe_demo():
    start = time.perf_counter()
    d = qe_failure_demo(act([], weights=[1]), cyc(2), t=Q(1, 4))
    failures = []
    if d.F != (Word((1,)),):
        failures.append(("F", d.F))
    if not (d.value_alpha == 0 and d.value_beta == Q(1, 4)):
        failures.append(("values", d.value_alpha, d.value_beta))
    if not (d.irs_equal and irs_equal(empirical_irs(d.alpha), empirical_irs(d.beta))):
        failures.append("irs differ")
    record(10, "QE failure: value 0 vs 1/4 with equal IRS", failures, time.perf_counter() - start, 1)


def test_criterion_11_axiom_checker():
    failures = []
    rng = random.Random(11)
    start = time.perf_counter()
    family = [generators.cyclic(n) for n in (1, 2, 5, 8)]
    family += [generators.orbits(s) for s in ("4,2", "3,3,1", "6,2,2")]
    family += [generators.random_action(rng.randint(1, 9), rng.randint(0, 3), s) for s in range(20)]
    family += [generators.coset_action(6, {"g": "(0 1 2)(3 4 5)", "h": "(0 3)(1 5)(2 4)"}),
               generators.coset_action(4, {"g": "(0 1)", "h": "(1 2 3)"})]
    family += [generators.random_weighted_action(rng.randrange(10 ** 6), max_atoms=10, max_k=2)
               for _ in range(40)]
    for idx, a in enumerate(family):
        k = max(a.k, 1)
        F_list = [[Word((i,))] for i in range(1, k + 1)]
        F_list += [[Word((1, 1))], [Word((1, -k)), Word((k, 1))], [Word((1,)), Word((-k, 1, k))]]
        if not check_theta_axioms(a, empirical_irs(a), F_list).ok:
            failures.append((idx, "axioms"))
        if len(a.space) <= 10:
            for F in F_list:
                if theta_value(a, F)[0] != theta_sup_exhaustive(a, F):
                    failures.append((idx, "sup", F))
    record(11, f"{len(family)} generated actions satisfy their own theta", failures, time.perf_counter() - start)


def test_criterion_12_decomposition_optimality():
    failures = []
    rng = random.Random(12)
    start = time.perf_counter()
    for i in range(150):
        n, k = rng.randint(2, 10), rng.randint(1, 2)
        a = generators.random_action(n, k, rng.randrange(10 ** 6))
        g = build_schreier(a, a.generator_words(False))
        M = rng.randint(1, 5)
        greedy = hyperfinite_decomposition(g, M, "greedy")
        exact = hyperfinite_decomposition(g, M, "exact")
        if not (greedy.revalidate(g) and exact.revalidate(g) and greedy.mu_E >= exact.mu_E):
            failures.append(("greedy", i))
    g_word = Word((1,))
    for n in range(2, 13):
        a = cyc(n)
        g = build_schreier(a, [g_word])
        comp = tuple(range(n))
        w = a.space.weights
        for M in range(1, n + 1):
            dp = sum((w[x] for x, _ in cycle_dp_cut(g, comp, M)), Q(0))
            ex = sum((w[x] for x, _ in exhaustive_cut(g, comp, M)), Q(0))
            if not dp == ex == min_cut_cycle(w, M):
                failures.append(("cycle", n, M))
    record(12, "greedy >= exact, cycle DP = exhaustive on cycles <= 12", failures, time.perf_counter() - start)
