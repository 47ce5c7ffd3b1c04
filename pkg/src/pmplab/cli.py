"""Command line interface.

Every command reads action documents, runs one library operation and
writes a JSON report to standard output.  Exit status: 0 on success, 1 when
a precondition fails (the report describes the violation), 2 on parse or
usage errors.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction

from . import generators
from .action import Word, action_distance, evaluate_word, support_witness
from .conjugacy import approximate_conjugacy, verify_witness
from .errors import (
    DomainMismatchError,
    InvalidInputError,
    InvariantViolation,
    ParseError,
    PreconditionError,
    ResourceError,
)
from .graphing import build_schreier, hyperfinite_decomposition, incident_vertices
from .io import (
    action_to_dict,
    canonical_json,
    jsonable,
    parse_fraction,
    parse_witness,
    read_action,
    serialize_action,
    witness_to_dict,
)
from .irs import CylinderQuery, distinguishing_class, empirical_irs, irs_cylinder, irs_equal
from .joining import amalgamate, join_over_irs
from .logic import DEFAULT_CAP, check_theta_axioms, eval_formula, parse_formula, qe_failure_demo
from .measure import generated_subalgebra, is_independent, tp_equal


def _words(text: str, names) -> list:
    if not text:
        return []
    try:
        return [Word.parse(t, names) for t in text.split(",") if t.strip()]
    except InvalidInputError as e:
        raise ParseError(str(e), "--words") from None


def _default_words(action, text):
    return _words(text, action.names) if text else action.generator_words(False)


def _events(names_text: str, events: dict, flag: str) -> list:
    out = []
    for name in [t.strip() for t in (names_text or "").split(",") if t.strip()]:
        if name not in events:
            raise ParseError(f"no event named {name!r} in the document", flag)
        out.append(events[name])
    return out


def _rational(text: str, flag: str) -> Fraction:
    return parse_fraction(text, flag)


def _irs_report(irs) -> list:
    return irs.serialize()


# -- commands --------------------------------------------------------------


def cmd_gen(args):
    kind = args.kind
    rest = args.params
    try:
        if kind == "cyclic":
            act = generators.cyclic(int(rest[0]))
        elif kind == "orbits":
            act = generators.orbits(rest[0])
        elif kind == "random":
            act = generators.random_action(int(rest[0]), int(rest[1]), args.seed)
        elif kind == "coset":
            n = int(rest[0])
            gens = {}
            for spec in rest[1:]:
                name, _, cyc = spec.partition("=")
                if not cyc:
                    raise ParseError(f"expected NAME=CYCLES, found {spec!r}", "coset")
                gens[name] = cyc
            act = generators.coset_action(n, gens)
        elif kind == "pair":
            a, b = generators.equal_irs_pair(args.seed)
            act = a if (rest[0] if rest else "a") == "a" else b
        else:
            raise ParseError(f"unknown generator kind {kind!r}", "kind")
    except (IndexError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"bad arguments for {kind}: {rest}", "params") from None
    return {"written": args.output, "atoms": len(act.space), "generators": list(act.names)}, serialize_action(act)


def cmd_irs(args):
    act, _ = read_action(args.file)
    irs = empirical_irs(act)
    return {"irs": _irs_report(irs), "classes": len(irs.masses)}


def cmd_irs_eq(args):
    a, _ = read_action(args.a)
    b, _ = read_action(args.b)
    ia, ib = empirical_irs(a), empirical_irs(b)
    report = {"equal": irs_equal(ia, ib)}
    if not report["equal"]:
        cls, ma, mb = distinguishing_class(ia, ib)
        report["distinguishing_class"] = cls.encode()
        report["mass_a"], report["mass_b"] = ma, mb
    return report


def cmd_cyl(args):
    act, _ = read_action(args.file)
    q = CylinderQuery(_words(args.fix, act.names), _words(args.move, act.names))
    return {"value": irs_cylinder(act, q), "fix": args.fix or "", "move": args.move or ""}


def cmd_decomp(args):
    act, events = read_action(args.file)
    g = build_schreier(act, _default_words(act, args.words), _events(args.params, events, "--params"))
    if args.bound is None:
        raise ParseError("decomp needs --bound M", "--bound")
    cert = hyperfinite_decomposition(g, args.bound, args.strategy)
    V = incident_vertices(g, cert.Z)
    return {
        "M": cert.M, "strategy": cert.strategy, "mu_E": cert.mu_E, "incident_measure": V.measure,
        "degree": g.degree,
        "cut": [[act.space.labels[x], act.space.labels[y]] for x, y in sorted(cert.Z.pairs) if x < y],
        "components": [[act.space.labels[x] for x in c] for c in cert.components],
    }


def cmd_du(args):
    a, _ = read_action(args.a)
    b, _ = read_action(args.b)
    return {"distance": action_distance(a, b)}


def cmd_support(args):
    act, _ = read_action(args.file)
    w = _words(args.word, act.names)
    if len(w) != 1:
        raise ParseError("give exactly one word", "--word")
    perm = evaluate_word(act, w[0])
    order = None
    if args.seed is not None:
        order = list(act.space.atoms)
        random.Random(args.seed).shuffle(order)
    sw = support_witness(act.space, perm, order)
    lab = act.space.labels
    return {"a0": [lab[x] for x in sorted(sw.a0.atoms)], "support": [lab[x] for x in sorted(sw.support.atoms)],
            "measure": sw.measure}


def _indep_args(args):
    act, events = read_action(args.file)
    A = _events(args.a, events, "--a")
    B = _events(args.b, events, "--b")
    C = generated_subalgebra(act.space, _events(args.c, events, "--c"))
    return act, A, B, C


def cmd_indep(args):
    act, A, B, C = _indep_args(args)
    v = is_independent(act.space, A, B, C)
    return {"independent": v.ok, "counterexample": v.counterexample}


def cmd_tp(args):
    act, A, B, C = _indep_args(args)
    v = tp_equal(act.space, A, B, C)
    return {"equal": v.ok, "counterexample": v.counterexample}


def cmd_join(args):
    a, _ = read_action(args.a)
    b, _ = read_action(args.b)
    res = join_over_irs(a, b)
    rep = {"atoms": len(res.action.space), "irs": _irs_report(empirical_irs(res.action))}
    if not args.output:
        rep["document"] = action_to_dict(res.action)
    return rep, serialize_action(res.action)


def cmd_amalg(args):
    a, ea = read_action(args.a)
    b, eb = read_action(args.b)
    ba = _events(args.blocks_a, ea, "--blocks-a")
    bb = _events(args.blocks_b, eb, "--blocks-b")
    k = max(a.k, b.k)
    names = (a if a.k >= b.k else b).names
    req = _words(args.require, names) if args.require else []
    am = amalgamate(a, b, ba, bb, req)
    rep = {"atoms": len(am.action.space), "generators": k}
    if not args.output:
        rep["document"] = action_to_dict(am.action)
    return rep, serialize_action(am.action)


def cmd_conj(args):
    a, _ = read_action(args.a)
    b, _ = read_action(args.b)
    k = max(a.k, b.k)
    names = (a if a.k >= b.k else b).with_generators(k).names
    words = _words(args.words, names) if args.words else [Word((i,)) for i in range(1, k + 1)]
    eps = None if args.epsilon is None else _rational(args.epsilon, "--epsilon")
    if args.exact and (eps is not None or args.bound is not None):
        raise ParseError("--exact excludes --epsilon and --bound", "flags")
    w = approximate_conjugacy(a, b, words, epsilon=eps, M=args.bound)
    doc = witness_to_dict(w)
    rep = {"measured": w.measured, "bound": w.bound, "mu_E": w.mu_E, "exact": w.exact, "refined_atoms": len(w.rho)}
    if not args.output:
        rep["witness"] = doc
    return rep, canonical_json(doc)


def cmd_conj_verify(args):
    a, _ = read_action(args.a)
    b, _ = read_action(args.b)
    try:
        with open(args.witness, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(str(e), args.witness) from None
    w = parse_witness(text, a, b)
    report = verify_witness(w, a, b)
    if not report.ok:
        raise PreconditionError("witness verification failed", report.as_dict())
    return report.as_dict()


def cmd_check_axioms(args):
    act, _ = read_action(args.file)
    theta = empirical_irs(read_action(args.irs)[0] if args.irs else act)
    F_list = [_words(f, act.names) for f in (args.F or [])] or [[w] for w in act.generator_words(False)]
    rep = check_theta_axioms(act, theta, F_list)
    return {"ok": rep.ok, "entries": [{"name": e.name, "value": e.value, "target": e.target, "ok": e.ok,
                                       "witness": e.witness} for e in rep.entries]}


def cmd_demo_qe(args):
    k1, _ = read_action(args.k1)
    k2, _ = read_action(args.k2)
    d = qe_failure_demo(k1, k2, _rational(args.t, "--t"))
    names = d.alpha.names
    return {"F": [w.format(names) for w in d.F], "value_alpha": d.value_alpha, "value_beta": d.value_beta,
            "irs_equal": d.irs_equal, "separated": d.separated,
            "block_measures": [b.measure for b in d.blocks_alpha],
            "alpha": action_to_dict(d.alpha), "beta": action_to_dict(d.beta)}


def cmd_eval(args):
    act, events = read_action(args.file)
    f = parse_formula(args.formula)
    assignment = {}
    for spec in args.assign or []:
        var, _, ev = spec.partition("=")
        assignment[var] = _events(ev, events, "--assign")[0] if ev else None
        if assignment[var] is None:
            raise ParseError(f"expected VAR=EVENT, found {spec!r}", "--assign")
    domains = {}
    for spec in args.domain or []:
        name, _, evs = spec.partition("=")
        domains[name] = generated_subalgebra(act.space, _events(evs, events, "--domain"))
    return {"value": eval_formula(act, f, assignment, domains, cap=args.max_enum)}


COMMANDS = {
    "gen": cmd_gen, "irs": cmd_irs, "irs-eq": cmd_irs_eq, "cyl": cmd_cyl, "decomp": cmd_decomp,
    "du": cmd_du, "support": cmd_support, "indep": cmd_indep, "tp": cmd_tp, "join": cmd_join,
    "amalg": cmd_amalg, "conj": cmd_conj, "conj-verify": cmd_conj_verify, "check-axioms": cmd_check_axioms,
    "demo-qe": cmd_demo_qe, "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for randomized choices")
    common.add_argument("--max-enum", type=int, default=DEFAULT_CAP, help="cap on enumerated events")
    common.add_argument("--human", action="store_true", help="readable output with decimal approximations")
    common.add_argument("-o", "--output", help="write the produced document (action or witness) here")

    p = argparse.ArgumentParser(prog="pmplab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    s = add("gen", "generate an action document: cyclic N | orbits 4,2 | random N K | coset N g='(0 1)' | pair a|b")
    s.add_argument("kind")
    s.add_argument("params", nargs="*")
    s = add("irs", "empirical IRS of an action")
    s.add_argument("file")
    s = add("irs-eq", "compare two empirical IRSs")
    s.add_argument("a")
    s.add_argument("b")
    s = add("cyl", "IRS cylinder mass: atoms fixed by every --fix word and moved by every --move word")
    s.add_argument("file")
    s.add_argument("--fix", default="")
    s.add_argument("--move", default="")
    s = add("decomp", "hyperfinite decomposition of the Schreier graphing")
    s.add_argument("file")
    s.add_argument("--words")
    s.add_argument("--params", help="comma-separated event names used as vertex colors")
    s.add_argument("--bound", type=int, help="component bound M")
    s.add_argument("--strategy", choices=["greedy", "exact", "auto"], default="auto")
    s = add("du", "uniform distance between two actions on the same space")
    s.add_argument("a")
    s.add_argument("b")
    s = add("support", "support witness of a word")
    s.add_argument("file")
    s.add_argument("--word", required=True)
    for name, text in (("indep", "conditional independence of --a and --b over --c"),
                       ("tp", "equality of the types of --a and --b over --c")):
        s = add(name, text)
        s.add_argument("file")
        s.add_argument("--a", required=True)
        s.add_argument("--b", required=True)
        s.add_argument("--c", default="")
    s = add("join", "relative independent joining over the IRS")
    s.add_argument("a")
    s.add_argument("b")
    s = add("amalg", "amalgamate over corresponding block events")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--blocks-a", required=True)
    s.add_argument("--blocks-b", required=True)
    s.add_argument("--require", default="")
    s = add("conj", "approximate conjugacy witness")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--words")
    s.add_argument("--exact", action="store_true")
    s.add_argument("--epsilon")
    s.add_argument("--bound", type=int, help="forced component bound M")
    s = add("conj-verify", "re-derive every property of a stored witness")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("witness")
    s = add("check-axioms", "check the theta axioms (theta = own IRS unless --irs FILE)")
    s.add_argument("file")
    s.add_argument("--irs")
    s.add_argument("--F", action="append", help="comma-separated word set; repeatable")
    s = add("demo-qe", "two models of one theory separated by a quantifier-free formula")
    s.add_argument("k1")
    s.add_argument("k2")
    s.add_argument("--t", default="1/4")
    s = add("eval", "evaluate a formula")
    s.add_argument("file")
    s.add_argument("formula")
    s.add_argument("--assign", action="append", help="VAR=EVENT")
    s.add_argument("--domain", action="append", help="NAME=EVENT,EVENT (generated subalgebra)")
    return p


def _human(obj, indent=0) -> list:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if k in ("document", "witness", "alpha", "beta"):
                lines.append(f"{pad}{k}: (document omitted; use -o)")
            elif isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_human(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_human_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_human(v, indent + 1))
            else:
                lines.append(f"{pad}- {_human_scalar(v)}")
    return lines


def _human_scalar(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator} (decimal approx. {float(v):.6g})"
    return str(v)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        result = COMMANDS[args.command](args)
        doc_text = None
        if isinstance(result, tuple):
            result, doc_text = result
        if args.output and doc_text is not None:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(doc_text)
        if args.command == "gen" and not args.output:
            out.write(doc_text)
        elif args.human:
            out.write("\n".join(_human(result)) + "\n")
        else:
            out.write(canonical_json(jsonable(result)))
        return 0
    except PreconditionError as e:
        out.write(canonical_json(jsonable({"status": "precondition-failed", "message": str(e),
                                           "witness": e.witness})))
        return 1
    except ResourceError as e:
        out.write(canonical_json(jsonable({"status": "resource-limit", "message": str(e),
                                           "required": e.required, "cap": e.cap})))
        return 1
    except (ParseError, InvalidInputError, DomainMismatchError) as e:
        print(f"pmplab: error: {e}", file=sys.stderr)
        return 2
    except InvariantViolation as e:
        print(f"pmplab: internal check failed: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
