"""A finite evaluator for continuous-logic formulas over measure algebras.

Formulas are written as s-expressions.  Terms denote events:

    x  0  1  (or t t ...)  (and t t ...)  (not t)  (diff t t)  (sym t t)
    (w "word" t)   image of t under the word
    (t "word" t)   t_w(a) = w^-1(a - wa) | (a - wa) | w(a - wa)
    (S "word")     the support of the word, as a constant

Real-valued formulas:

    (mu t)  (d t t)  p/q  (neg f)  (absdiff f f)  (+ f ...)  (- f f)
    (* p/q f)  (min f ...)  (max f ...)
    (sup x DOMAIN f)  (inf x DOMAIN f)

DOMAIN is ``all`` (every event) or a name bound to a Subalgebra at
evaluation time.  Quantifiers enumerate their domain exhaustively and refuse
domains above a cap (4096 events by default).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import lcm
from typing import Mapping, Sequence

from .action import Action, Word, action_distance, evaluate_word, support_event, support_witness, t_term
from .errors import DomainMismatchError, InvalidInputError, InvariantViolation, ParseError, PreconditionError, ResourceError
from .irs import EmpiricalIRS, empirical_irs, irs_equal
from .measure import AtomSpace, Event, Subalgebra

DEFAULT_CAP = 1 << 12

TERM_OPS = {"or": (2, None), "and": (2, None), "not": (1, 1), "diff": (2, 2), "sym": (2, 2)}
REAL_OPS = {"neg": (1, 1), "absdiff": (2, 2), "+": (1, None), "-": (2, 2), "min": (1, None), "max": (1, None)}


@dataclass(frozen=True)
class Formula:
    """Node of a term or formula tree; ``sort`` is "term" or "real"."""

    op: str
    args: tuple
    sort: str

    def __str__(self):
        return to_text(self)


def var(name: str) -> Formula:
    return Formula("var", (name,), "term")


def const(q) -> Formula:
    return Formula("const", (Fraction(q),), "real")


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r'\s*(?:(\()|(\))|"([^"]*)"|([^\s()"]+))')


def _tokenize(text: str) -> list:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", f"offset {pos}")
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("(", start))
        elif m.group(2):
            out.append((")", start))
        elif m.group(3) is not None:
            out.append(("str", m.group(3), start))
        else:
            out.append(("sym", m.group(4), start))
        pos = m.end()
    return out


def _read(tokens: list, i: int):
    if i >= len(tokens):
        raise ParseError("unexpected end of input", "end")
    tok = tokens[i]
    if tok[0] == "(":
        items, i = [], i + 1
        while True:
            if i >= len(tokens):
                raise ParseError("unclosed parenthesis", f"offset {tok[1]}")
            if tokens[i][0] == ")":
                return ("list", items, tok[1]), i + 1
            item, i = _read(tokens, i)
            items.append(item)
    if tok[0] == ")":
        raise ParseError("unexpected ')'", f"offset {tok[1]}")
    return tok, i + 1


def _rational(text: str):
    if re.fullmatch(r"-?\d+(/\d+)?", text):
        q = Fraction(text)
        return q
    return None


def _build(node, sort: str) -> Formula:
    where = f"offset {node[-1]}"
    if node[0] == "str":
        raise ParseError("a word string is only allowed after w, t or S", where)
    if node[0] == "sym":
        text = node[1]
        if sort == "term":
            if text in ("0", "1"):
                return Formula(text, (), "term")
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9']*", text):
                raise ParseError(f"bad variable name {text!r}", where)
            return var(text)
        q = _rational(text)
        if q is None:
            raise ParseError(f"expected a formula, found {text!r}", where)
        return const(q)
    items = node[1]
    if not items or items[0][0] != "sym":
        raise ParseError("expected an operator", where)
    op, rest = items[0][1], items[1:]

    def need(lo, hi):
        if len(rest) < lo or (hi is not None and len(rest) > hi):
            raise ParseError(f"{op} takes {lo}{'' if hi == lo else '+' if hi is None else f'-{hi}'} arguments", where)

    def word_arg(n):
        if n[0] != "str":
            raise ParseError(f"{op} expects a quoted word", f"offset {n[-1]}")
        return n[1]

    if sort == "term":
        if op in TERM_OPS:
            need(*TERM_OPS[op])
            return Formula(op, tuple(_build(r, "term") for r in rest), "term")
        if op in ("w", "t"):
            need(2, 2)
            return Formula(op, (word_arg(rest[0]), _build(rest[1], "term")), "term")
        if op == "S":
            need(1, 1)
            return Formula("S", (word_arg(rest[0]),), "term")
        raise ParseError(f"unknown term operator {op!r}", where)
    if op == "mu":
        need(1, 1)
        return Formula("mu", (_build(rest[0], "term"),), "real")
    if op == "d":
        need(2, 2)
        return Formula("d", (_build(rest[0], "term"), _build(rest[1], "term")), "real")
    if op in REAL_OPS:
        need(*REAL_OPS[op])
        return Formula(op, tuple(_build(r, "real") for r in rest), "real")
    if op == "*":
        need(2, 2)
        q = _rational(rest[0][1]) if rest[0][0] == "sym" else None
        if q is None:
            raise ParseError("* expects a rational coefficient first", where)
        return Formula("*", (q, _build(rest[1], "real")), "real")
    if op in ("sup", "inf"):
        need(3, 3)
        if rest[0][0] != "sym" or rest[1][0] != "sym":
            raise ParseError(f"{op} expects a variable and a domain name", where)
        return Formula(op, (rest[0][1], rest[1][1], _build(rest[2], "real")), "real")
    raise ParseError(f"unknown operator {op!r}", where)


def parse_formula(text: str, sort: str = "real") -> Formula:
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty formula", "offset 0")
    node, i = _read(tokens, 0)
    if i != len(tokens):
        raise ParseError("trailing input", f"offset {tokens[i][-1]}")
    return _build(node, sort)


def to_text(f: Formula) -> str:
    op, a = f.op, f.args
    if op == "var":
        return a[0]
    if op in ("0", "1"):
        return op
    if op == "const":
        return str(a[0])
    if op in ("w", "t"):
        return f'({op} "{a[0]}" {to_text(a[1])})'
    if op == "S":
        return f'(S "{a[0]}")'
    if op == "*":
        return f"(* {a[0]} {to_text(a[1])})"
    if op in ("sup", "inf"):
        return f"({op} {a[0]} {a[1]} {to_text(a[2])})"
    return "(" + " ".join([op] + [to_text(x) for x in a]) + ")"


def free_vars(f: Formula) -> frozenset:
    if f.op == "var":
        return frozenset(f.args)
    if f.op in ("sup", "inf"):
        return free_vars(f.args[2]) - {f.args[0]}
    out = frozenset()
    for a in f.args:
        if isinstance(a, Formula):
            out |= free_vars(a)
    return out


# -- evaluation ------------------------------------------------------------


class _Model:
    """Bitmask view of an action: events are ints, measures are integer multiples of 1/den."""

    def __init__(self, action: Action):
        self.action = action
        space = action.space
        self.n = len(space)
        self.full = (1 << self.n) - 1
        self.den = lcm(*(w.denominator for w in space.weights))
        iw = [w.numerator * (self.den // w.denominator) for w in space.weights]
        self.mtables = [self._chunk_table(lambda x: iw[x], base) for base in range(0, self.n, 8)]
        self._images = {}
        self._words = {}

    def _chunk_table(self, f, base):
        size = min(8, self.n - base)
        table = [0] * (1 << size)
        for b in range(1, 1 << size):
            low = (b & -b).bit_length() - 1
            table[b] = table[b & (b - 1)] + f(base + low)
        return table

    def measure(self, mask: int) -> int:
        total = 0
        for t in self.mtables:
            total += t[mask & 0xFF]
            mask >>= 8
        return total

    def word(self, text: str) -> Word:
        w = self._words.get(text)
        if w is None:
            w = self._words[text] = Word.parse(text, self.action.names)
        return w

    def image(self, w: Word, mask: int) -> int:
        tables = self._images.get(w)
        if tables is None:
            p = evaluate_word(self.action, w)
            tables = [self._chunk_table(lambda x: 1 << p[x], base) for base in range(0, self.n, 8)]
            # chunk tables sum disjoint bits, which equals or-ing them
            self._images[w] = tables
        out = 0
        for t in tables:
            out |= t[mask & 0xFF]
            mask >>= 8
        return out

    def to_mask(self, e: Event) -> int:
        if e.space != self.action.space:
            raise DomainMismatchError("assigned event is not on the action's space")
        m = 0
        for x in e.atoms:
            m |= 1 << x
        return m

    def to_event(self, mask: int) -> Event:
        return Event(self.action.space, frozenset(x for x in range(self.n) if mask >> x & 1))


def _domain_masks(model: _Model, name: str, domains: Mapping, cap: int) -> list:
    if name == "all":
        size = 1 << model.n
        if size > cap:
            raise ResourceError(f"quantifier over all {size} events exceeds the cap {cap}", required=size, cap=cap)
        return range(size)
    if name not in domains:
        raise InvalidInputError(f"unknown quantifier domain {name!r}")
    sub = domains[name]
    if not isinstance(sub, Subalgebra) or sub.space != model.action.space:
        raise DomainMismatchError(f"domain {name!r} is not a subalgebra of the action's space")
    size = 1 << len(sub.blocks)
    if size > cap:
        raise ResourceError(f"quantifier over {size} events of {name!r} exceeds the cap {cap}", required=size, cap=cap)
    bmasks = [sum(1 << x for x in b) for b in sub.blocks]
    out = []
    for bits in range(size):
        m = 0
        for j, bm in enumerate(bmasks):
            if bits >> j & 1:
                m |= bm
        out.append(m)
    return out


def _term(model: _Model, f: Formula, env: dict) -> int:
    op, a = f.op, f.args
    if op == "var":
        try:
            return env[a[0]]
        except KeyError:
            raise InvalidInputError(f"variable {a[0]!r} is not assigned") from None
    if op == "0":
        return 0
    if op == "1":
        return model.full
    if op == "or":
        out = 0
        for t in a:
            out |= _term(model, t, env)
        return out
    if op == "and":
        out = model.full
        for t in a:
            out &= _term(model, t, env)
        return out
    if op == "not":
        return model.full ^ _term(model, a[0], env)
    if op == "diff":
        return _term(model, a[0], env) & ~_term(model, a[1], env)
    if op == "sym":
        return _term(model, a[0], env) ^ _term(model, a[1], env)
    if op == "w":
        return model.image(model.word(a[0]), _term(model, a[1], env))
    if op == "t":
        w = model.word(a[0])
        x = _term(model, a[1], env)
        core = x & ~model.image(w, x)
        return model.image(w.inverse(), core) | core | model.image(w, core)
    if op == "S":
        return model.to_mask(support_event(model.action, model.word(a[0])))
    raise InvalidInputError(f"unknown term operator {op!r}")


def _real(model: _Model, f: Formula, env: dict, domains, cap) -> Fraction:
    op, a = f.op, f.args
    if op == "const":
        return a[0]
    if op == "mu":
        return Fraction(model.measure(_term(model, a[0], env)), model.den)
    if op == "d":
        return Fraction(model.measure(_term(model, a[0], env) ^ _term(model, a[1], env)), model.den)
    if op in ("sup", "inf"):
        name, dom, body = a
        pick = max if op == "sup" else min
        saved = env.get(name)
        vals = []
        for m in _domain_masks(model, dom, domains, cap):
            env[name] = m
            vals.append(_real(model, body, env, domains, cap))
        if saved is None:
            env.pop(name, None)
        else:
            env[name] = saved
        return pick(vals)
    vals = [_real(model, x, env, domains, cap) if isinstance(x, Formula) else x for x in a]
    if op == "neg":
        return 1 - vals[0]
    if op == "absdiff":
        return abs(vals[0] - vals[1])
    if op == "+":
        return sum(vals, Fraction(0))
    if op == "-":
        return vals[0] - vals[1]
    if op == "*":
        return vals[0] * vals[1]
    if op == "min":
        return min(vals)
    if op == "max":
        return max(vals)
    raise InvalidInputError(f"unknown operator {op!r}")


def eval_formula(action: Action, f, assignment: Mapping[str, Event] = None, domains: Mapping = None,
                 cap: int = DEFAULT_CAP) -> Fraction:
    """Exact value of a real-valued formula in the action."""
    if isinstance(f, str):
        f = parse_formula(f)
    if f.sort != "real":
        raise InvalidInputError("a real-valued formula is required; wrap terms in mu or d")
    model = _Model(action)
    env = {k: model.to_mask(v) for k, v in (assignment or {}).items()}
    missing = free_vars(f) - set(env)
    if missing:
        raise InvalidInputError(f"unassigned free variables: {sorted(missing)}")
    return _real(model, f, env, domains or {}, cap)


def eval_term(action: Action, t, assignment: Mapping[str, Event] = None) -> Event:
    if isinstance(t, str):
        t = parse_formula(t, "term")
    model = _Model(action)
    env = {k: model.to_mask(v) for k, v in (assignment or {}).items()}
    return model.to_event(_term(model, t, env))


# -- moduli ----------------------------------------------------------------


def modulus(f: Formula, name: str) -> Fraction:
    """Lipschitz constant of f in the event assigned to ``name`` (measure metric)."""
    op, a = f.op, f.args
    if op == "var":
        return Fraction(int(a[0] == name))
    if op in ("0", "1", "S", "const"):
        return Fraction(0)
    if op == "w":
        return modulus(a[1], name)
    if op == "t":
        # a - wa is 2-Lipschitz; its three translates are unioned
        return 6 * modulus(a[1], name)
    if op in ("sup", "inf"):
        return Fraction(0) if a[0] == name else modulus(a[2], name)
    if op == "*":
        return abs(a[0]) * modulus(a[1], name)
    ms = [modulus(x, name) for x in a]
    if op in ("min", "max"):
        return max(ms)
    return sum(ms, Fraction(0))


def action_modulus(f: Formula, names: Sequence[str]) -> Fraction:
    """Lipschitz constant of f in the action, for the max-over-generators uniform metric."""
    op, a = f.op, f.args

    def length(text):
        return len(Word.parse(text, names))

    if op in ("var", "0", "1", "const"):
        return Fraction(0)
    if op == "w":
        return length(a[0]) + action_modulus(a[1], names)
    if op == "t":
        return 6 * action_modulus(a[1], names) + 5 * length(a[0])
    if op == "S":
        # points moved by exactly one of two permutations weigh at most 3/2 of their distance
        return Fraction(3, 2) * length(a[0])
    if op in ("sup", "inf"):
        return action_modulus(a[2], names)
    if op == "*":
        return abs(a[0]) * action_modulus(a[1], names)
    ms = [action_modulus(x, names) for x in a]
    if op in ("min", "max"):
        return max(ms)
    return sum(ms, Fraction(0))


@dataclass(frozen=True)
class ProbeReport:
    distance: Fraction
    gap: Fraction
    modulus: Fraction
    ok: bool
    worst: dict = field(default=None)


def _all_assignments(space: AtomSpace, names, cap):
    size = (1 << len(space)) ** len(names)
    if size > cap:
        raise ResourceError(f"{size} assignments exceed the cap {cap}", required=size, cap=cap)
    events = [Event(space, frozenset(x for x in space.atoms if m >> x & 1)) for m in range(1 << len(space))]
    for combo in product(events, repeat=len(names)):
        yield dict(zip(names, combo))


def formula_continuity_probe(f, alpha: Action, beta: Action, assignments=None,
                             cap: int = DEFAULT_CAP) -> ProbeReport:
    """Action distance against the largest evaluation gap over the assignments.

    The gap is checked against the formula's action modulus times the
    distance.  Without explicit assignments every assignment of the free
    variables is tried.
    """
    if isinstance(f, str):
        f = parse_formula(f)
    if alpha.space != beta.space:
        raise DomainMismatchError("actions live on different spaces")
    dist = action_distance(alpha, beta)
    if assignments is None:
        assignments = _all_assignments(alpha.space, sorted(free_vars(f)), cap)
    gap, worst = Fraction(0), None
    for asg in assignments:
        d = abs(eval_formula(alpha, f, asg, cap=cap) - eval_formula(beta, f, asg, cap=cap))
        if worst is None or d > gap:
            gap, worst = d, {k: sorted(v.atoms) for k, v in asg.items()}
    L = action_modulus(f, alpha.with_generators(max(alpha.k, beta.k)).names)
    return ProbeReport(dist, gap, L, gap <= L * dist, worst)


# -- theory axioms ---------------------------------------------------------


@dataclass(frozen=True)
class AxiomEntry:
    name: str
    value: Fraction
    target: Fraction
    ok: bool
    witness: dict = None


@dataclass(frozen=True)
class AxiomReport:
    entries: tuple

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.ok]


EXHAUSTIVE_LAW_ATOMS = 6


def _law_entries(action: Action) -> list:
    """Automorphism and action laws, atomwise and (on small spaces) as sentences."""
    out = []
    w = action.space.weights
    for i, name in enumerate(action.names, start=1):
        p = action.perms[i - 1]
        bad = next((x for x in action.space.atoms if w[p[x]] != w[x]), None)
        out.append(AxiomEntry(f"{name} preserves the measure", Fraction(int(bad is not None)), Fraction(0),
                              bad is None, None if bad is None else {"atom": bad}))
    if len(action.space) > EXHAUSTIVE_LAW_ATOMS:
        return out
    laws = {
        "join": '(sup a all (sup b all (d (w "{g}" (or a b)) (or (w "{g}" a) (w "{g}" b)))))',
        "meet": '(sup a all (sup b all (d (w "{g}" (and a b)) (and (w "{g}" a) (w "{g}" b)))))',
        "complement": '(sup a all (d (w "{g}" (not a)) (not (w "{g}" a))))',
        "measure": '(sup a all (absdiff (mu (w "{g}" a)) (mu a)))',
        "inverse": '(sup a all (d (w "{g}^-1" (w "{g}" a)) a))',
    }
    for name in action.names:
        for law, text in laws.items():
            f = parse_formula(text.format(g=name))
            v = eval_formula(action, f, cap=1 << 12)
            out.append(AxiomEntry(f"{name} respects {law}", v, Fraction(0), v == 0, None if v == 0 else {"formula": to_text(f)}))
    return out


def theta_value(action: Action, F: Sequence[Word]) -> tuple:
    """mu of the meet of t_w(a_w) at support witnesses a_w, and those witnesses."""
    meet = action.space.full()
    witnesses = {}
    for w in F:
        perm = evaluate_word(action, w)
        sw = support_witness(action.space, perm)
        t = t_term(action.space, perm, sw.a0)
        if t != sw.support:
            raise InvariantViolation(f"t-term at the witness is not the support of {w.letters}")
        meet = meet & t
        witnesses[w.format(action.names)] = sorted(sw.a0.atoms)
    return meet.measure, witnesses


def check_theta_axioms(action: Action, theta: EmpiricalIRS, F_list: Sequence[Sequence[Word]]) -> AxiomReport:
    """Check the theta axioms for each F, plus the automorphism laws."""
    entries = _law_entries(action)
    for F in F_list:
        F = list(F)
        value, witnesses = theta_value(action, F)
        target = theta.supp_cylinder(F)
        label = "{" + ", ".join(w.format(action.names) for w in F) + "}"
        entries.append(AxiomEntry(f"theta{label}", value, target, value == target,
                                  None if value == target else {"a": witnesses}))
    return AxiomReport(tuple(entries))


def theta_sup_exhaustive(action: Action, F: Sequence[Word], cap: int = DEFAULT_CAP) -> Fraction:
    """sup over all (a_w) of mu(meet of t_w(a_w)), by exhaustive search over distinct t-values."""
    model = _Model(action)
    size = 1 << model.n
    if size > cap:
        raise ResourceError(f"{size} events exceed the cap {cap}", required=size, cap=cap)
    values = []
    for w in F:
        inv = w.inverse()
        seen = set()
        for m in range(size):
            core = m & ~model.image(w, m)
            seen.add(model.image(inv, core) | core | model.image(w, core))
        values.append(sorted(seen))
    best = 0
    for combo in product(*values):
        meet = model.full
        for m in combo:
            meet &= m
        best = max(best, model.measure(meet))
    return Fraction(best, model.den)


# -- quantifier elimination failure ---------------------------------------


@dataclass(frozen=True)
class QEDemo:
    alpha: Action
    beta: Action
    blocks_alpha: tuple
    blocks_beta: tuple
    F: tuple
    value_alpha: Fraction
    value_beta: Fraction
    irs_equal: bool

    @property
    def separated(self) -> bool:
        return self.value_alpha != self.value_beta


def _glue(parts, k: int, names) -> tuple:
    """Disjoint union of (action, scale, tag) parts; returns the action and block events."""
    weights, labels, perms = [], [], [[] for _ in range(k)]
    offsets = []
    for act, scale, tag in parts:
        off = len(weights)
        offsets.append(off)
        act = act.with_generators(k)
        for x in act.space.atoms:
            weights.append(act.space.weights[x] * scale)
            labels.append(f"{tag}:{act.space.labels[x]}")
        for g in range(k):
            perms[g].extend(off + y for y in act.perms[g])
    glued = Action(AtomSpace(tuple(weights), tuple(labels)), names, tuple(tuple(p) for p in perms))
    blocks = []
    for (act, _, _), off in zip(parts, offsets):
        blocks.append(Event(glued.space, frozenset(range(off, off + len(act.space)))))
    return glued, tuple(blocks)


def qe_failure_demo(k1: Action, k2: Action, t=Fraction(1, 4), F_candidates=None) -> QEDemo:
    """Two models of one theory that disagree on a quantifier-free type over a common substructure.

    alpha carries k1 on block a, k2 on blocks b and c; beta carries k2 on a
    and c, k1 on b.  Block weights are t, t, 1 - 2t (c vanishes at t = 1/2).
    """
    t = Fraction(t)
    if not 0 < t <= Fraction(1, 2):
        raise InvalidInputError("t must lie in (0, 1/2]")
    i1, i2 = empirical_irs(k1), empirical_irs(k2)
    if irs_equal(i1, i2):
        raise PreconditionError("the two actions have equal IRS, so the demonstration degenerates")
    k = max(k1.k, k2.k, 1)
    names = (k1 if k1.k >= k2.k else k2).with_generators(k).names
    pa = [(k1, t, "a"), (k2, t, "b")]
    pb = [(k2, t, "a"), (k1, t, "b")]
    if t < Fraction(1, 2):
        pa.append((k2, 1 - 2 * t, "c"))
        pb.append((k2, 1 - 2 * t, "c"))
    alpha, ba = _glue(pa, k, names)
    beta, bb = _glue(pb, k, names)
    same = irs_equal(empirical_irs(alpha), empirical_irs(beta))
    if not same:
        raise InvariantViolation("glued models have different IRS")
    if F_candidates is None:
        gens = [Word((i,)) for i in range(1, k + 1)]
        F_candidates = [[g] for g in gens] + [[g, h] for g in gens for h in gens if g < h] \
            + [[Word((i, j))] for i in range(1, k + 1) for j in range(1, k + 1)]
    chosen = None
    for F in F_candidates:
        va = _block_value(alpha, ba[0], F)
        vb = _block_value(beta, bb[0], F)
        if chosen is None or (va != vb and chosen[1] == chosen[2]):
            chosen = (tuple(F), va, vb)
        if va != vb:
            break
    return QEDemo(alpha, beta, ba, bb, chosen[0], chosen[1], chosen[2], same)


def _block_value(action: Action, block: Event, F) -> Fraction:
    meet = block
    for w in F:
        meet = meet & support_event(action, w)
    return meet.measure
