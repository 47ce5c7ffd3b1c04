import dataclasses
import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import act, cyc
from pmplab.action import FactorMap, Word, evaluate_word
from pmplab.conjugacy import approximate_conjugacy, conjugacy_witness_factor, verify_witness
from pmplab.errors import PreconditionError
from pmplab.generators import equal_irs_pair
from pmplab.io import parse_witness, serialize_action, witness_to_dict, canonical_json

TWO_C2 = act([(1, 0, 3, 2)])


def universally_equivariant(w):
    """rho commutes with every generator on every refined atom."""
    k = max(w.alpha_hat.k, w.beta_hat.k)
    for i in range(1, k + 1):
        pa = evaluate_word(w.alpha_hat, Word((i,)))
        pb = evaluate_word(w.beta_hat, Word((i,)))
        if any(w.rho[pa[r]] != pb[w.rho[r]] for r in range(len(pa))):
            return False
    return True


def test_factor_witness_splits_c2_atoms():
    c2 = cyc(2)
    w = conjugacy_witness_factor(c2, TWO_C2, FactorMap(TWO_C2, c2, (0, 1, 0, 1)))
    assert w.ref_alpha.refined.weights == (Q(1, 4),) * 4
    assert w.exact and w.measured == 0
    assert universally_equivariant(w)
    assert verify_witness(w, c2, TWO_C2).ok


def test_identity_factor_is_exact():
    a = act([(1, 2, 0, 4, 3), (0, 2, 1, 3, 4)])
    w = conjugacy_witness_factor(a, a, FactorMap(a, a, tuple(range(5))))
    assert w.exact and universally_equivariant(w)


def test_long_cycle_with_forced_bound():
    c = cyc(100)
    w = conjugacy_witness_factor(c, c, FactorMap(c, c, tuple(range(100))), M=20)
    assert w.mu_E == Q(1, 10)
    assert w.measured <= w.bound <= Q(1, 5)
    assert verify_witness(w, c, c).ok


def test_approximate_conjugacy_examples():
    c4 = cyc(4)
    assert approximate_conjugacy(c4, c4).exact
    w = approximate_conjugacy(cyc(2), TWO_C2)
    assert w.exact and universally_equivariant(w)
    with pytest.raises(PreconditionError) as e:
        approximate_conjugacy(cyc(4), cyc(2))
    assert "class" in e.value.witness


def test_epsilon_mode_meets_budget():
    c = cyc(100)
    eps = Q(1, 5)
    w = conjugacy_witness_factor(c, c, FactorMap(c, c, tuple(range(100))), epsilon=eps)
    # the first M with mu_E below eps / 2d is 50: two undirected cuts
    assert w.mu_E == Q(1, 25) and len(w.cut) == 2
    assert w.measured <= w.bound < eps
    c = cyc(60)
    w = approximate_conjugacy(c, c, epsilon=eps)
    assert w.measured <= w.bound < eps
    assert verify_witness(w, c, c).ok


def test_parameters_are_respected():
    c2 = cyc(2)
    A = c2.space.event([0])
    B = TWO_C2.space.event([0, 2])
    pi = FactorMap(TWO_C2, c2, (0, 1, 0, 1))
    w = conjugacy_witness_factor(c2, TWO_C2, pi, params=[(A, B)])
    assert verify_witness(w, c2, TWO_C2, params=[(A, B)]).ok
    with pytest.raises(PreconditionError):
        conjugacy_witness_factor(c2, TWO_C2, pi, params=[(A, TWO_C2.space.event([0]))])


def test_corrupted_rho_is_caught():
    w = approximate_conjugacy(cyc(2), TWO_C2)
    rho = list(w.rho)
    rho[0], rho[1] = rho[1], rho[1]
    bad = dataclasses.replace(w, rho=tuple(rho))
    rep = verify_witness(bad, cyc(2), TWO_C2)
    assert not rep.ok
    assert any(i.get("atom") == 1 for i in rep.issues)


def test_understated_bound_is_caught():
    c = cyc(100)
    w = approximate_conjugacy(c, c, M=20)
    assert w.measured > 0
    bad = dataclasses.replace(w, bound=w.measured / 2)
    rep = verify_witness(bad, c, c)
    assert not rep.ok
    issue = next(i for i in rep.issues if i["check"] == "bound")
    assert Q(issue["measured"]) == w.measured and Q(issue["claimed"]) == w.measured / 2


def test_witness_document_round_trip():
    alpha, beta = equal_irs_pair(4, max_atoms=16)
    w = approximate_conjugacy(alpha, beta)
    text = canonical_json(witness_to_dict(w))
    back = parse_witness(text, alpha, beta)
    assert back.rho == w.rho and back.bound == w.bound
    assert verify_witness(back, alpha, beta).ok
    assert canonical_json(witness_to_dict(back)) == text
    assert serialize_action(back.alpha_hat) == serialize_action(w.alpha_hat)


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_forced_bound_chain(seed, M):
    alpha, beta = equal_irs_pair(seed, max_atoms=24)
    w = approximate_conjugacy(alpha, beta, M=M)
    assert w.measured <= w.bound <= 2 * w.mu_E or w.bound == 0
    assert verify_witness(w, alpha, beta).ok


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6))
def test_exact_mode_on_equal_irs_pairs(seed):
    alpha, beta = equal_irs_pair(seed, max_atoms=30)
    w = approximate_conjugacy(alpha, beta)
    assert w.exact and universally_equivariant(w)
    assert verify_witness(w, alpha, beta).ok


def test_longer_words():
    rng = random.Random(2)
    alpha, beta = equal_irs_pair(rng.randrange(10 ** 6), max_atoms=20)
    k = max(alpha.k, beta.k)
    words = [Word((1, 1)), Word((1, -k))]
    w = approximate_conjugacy(alpha, beta, words)
    assert w.exact
    assert verify_witness(w, alpha, beta, words).ok
