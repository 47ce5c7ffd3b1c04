import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from pmplab import generators  # noqa: E402
from pmplab.action import Action, Word, support_event  # noqa: E402
from pmplab.joining import disintegrate  # noqa: E402
from pmplab.measure import AtomSpace  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])


def cyc(n):
    return Action(AtomSpace.uniform(n), ("g",), (tuple((i + 1) % n for i in range(n)),))


def act(perms, weights=None, names=None):
    n = len(perms[0]) if perms else len(weights)
    space = AtomSpace(tuple(Fraction(w) for w in weights)) if weights else AtomSpace.uniform(n)
    names = names or tuple("ghijk"[: len(perms)])
    return Action(space, names, tuple(tuple(p) for p in perms))


@st.composite
def actions(draw, max_n=8, max_k=2, min_n=1):
    """Random action; weights are random per orbit so every generator preserves them."""
    n = draw(st.integers(min_n, max_n))
    k = draw(st.integers(0, max_k))
    perms = [tuple(draw(st.permutations(range(n)))) for _ in range(k)]
    base = Action(AtomSpace.uniform(n), tuple("ghijk"[:k]), tuple(perms))
    orbs = base.orbits()
    masses = [draw(st.integers(1, 5)) for _ in orbs]
    total = sum(masses)
    w = [None] * n
    for o, m in zip(orbs, masses):
        for x in o:
            w[x] = Fraction(m, total * len(o))
    return Action(AtomSpace(tuple(w)), base.names, base.perms)


@pytest.fixture
def c4():
    return cyc(4)


@pytest.fixture
def c2():
    return cyc(2)


def skew_extension(base, rng, max_fiber=3):
    """Extension of ``base``: each orbit gets a fiber with random weights and random per-atom fiber permutations.

    Returns the extension and the block events (preimages of base atoms).
    """
    n = len(base.space)
    fiber_w = {}
    for orb in base.orbits():
        f = rng.randint(1, max_fiber)
        raw = [rng.randint(1, 3) for _ in range(f)]
        tot = sum(raw)
        for z in orb:
            fiber_w[z] = [Fraction(r, tot) for r in raw]
    index, weights = {}, []
    for z in range(n):
        for i, u in enumerate(fiber_w[z]):
            index[(z, i)] = len(weights)
            weights.append(base.space.weights[z] * u)
    perms = []
    for p in base.perms:
        perm = [None] * len(weights)
        for z in range(n):
            f = len(fiber_w[z])
            # shuffle only among equal fiber weights so the weights are preserved
            groups = {}
            for i, u in enumerate(fiber_w[z]):
                groups.setdefault(u, []).append(i)
            for members in groups.values():
                img = members[:]
                rng.shuffle(img)
                for i, j in zip(members, img):
                    perm[index[(z, i)]] = index[(p[z], j)]
            assert f == len(fiber_w[p[z]])
        perms.append(tuple(perm))
    ext = Action(AtomSpace(tuple(weights)), base.names, tuple(perms))
    space = ext.space
    blocks = [space.event(index[(z, i)] for i in range(len(fiber_w[z]))) for z in range(n)]
    return ext, blocks


def amalgam_instance(seed):
    rng = random.Random(seed)
    base = generators.random_weighted_action(rng.randrange(1 << 30), max_atoms=5, max_k=2)
    m1, b1 = skew_extension(base, rng)
    m2, b2 = skew_extension(base, rng)
    words = [Word(w) for w in [(1,), (2,), (1, 1), (1, 2), (1, -2), (2, 2)]]
    required = []
    for w in words:
        s1 = support_event(m1, w)
        s2 = support_event(m2, w)
        u1 = [j for j, b in enumerate(b1) if b.atoms <= s1.atoms]
        u2 = [j for j, b in enumerate(b2) if b.atoms <= s2.atoms]
        if u1 == u2 and s1.atoms == frozenset().union(*(b1[j].atoms for j in u1)) \
                and s2.atoms == frozenset().union(*(b2[j].atoms for j in u2)):
            required.append(w)
    return m1, m2, b1, b2, required


def amalgam_weights_by_disintegration(am):
    """Amalgam weights rebuilt from the two fiber disintegrations over the shared base."""
    pi1, pi2 = am.join.pi1, am.join.pi2
    d1, d2 = dict(), dict()
    for z, fib in enumerate(disintegrate(pi1).fibers):
        d1.update({x: (z, c) for x, c in fib})
    for z, fib in enumerate(disintegrate(pi2).fibers):
        d2.update({y: (z, c) for y, c in fib})
    lam = am.join.base.space.weights
    out = {}
    for x, (z1, c1) in d1.items():
        for y, (z2, c2) in d2.items():
            if z1 == z2:
                out[(x, y)] = lam[z1] * c1 * c2
    return out
