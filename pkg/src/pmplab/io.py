"""Versioned JSON documents for actions, witnesses and reports.

An action document::

    {
      "format": "pmplab-action/1",
      "atoms": [{"id": "0", "weight": "1/4"}, ...],
      "generators": [{"name": "g", "perm": ["1", "2", "3", "0"]}, ...],
      "events": {"A": ["0", "2"]}
    }

Permutations list the image of each atom, in atom order, by id.  Weights
are exact "p/q" strings.  Canonical text is ``json.dumps(..., indent=2,
sort_keys=True)`` plus a newline, so serialize(parse(text)) == text for
canonical input.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Mapping

from .action import Action
from .errors import InvalidInputError, ParseError
from .measure import AtomSpace, Event, Refinement

ACTION_FORMAT = "pmplab-action/1"
WITNESS_FORMAT = "pmplab-witness/1"

_RATIONAL = re.compile(r"\s*\d+\s*(/\s*\d+\s*)?")


def fraction_text(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text, where: str) -> Fraction:
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL.fullmatch(text):
        raise ParseError(f"expected a rational string like \"1/4\", found {text!r}", where)
    try:
        return Fraction(text.replace(" ", ""))
    except ZeroDivisionError:
        raise ParseError("zero denominator", where) from None


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, f"line {e.lineno} column {e.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", "document")
    return doc


def _field(doc: Mapping, key: str, kind, where: str):
    if key not in doc:
        raise ParseError(f"missing field {key!r}", where)
    val = doc[key]
    if not isinstance(val, kind):
        raise ParseError(f"field {key!r} has the wrong type", f"{where}.{key}")
    return val


def action_from_dict(doc: Mapping) -> tuple:
    """(Action, named events) from a parsed document, with located errors."""
    fmt = doc.get("format")
    if fmt != ACTION_FORMAT:
        raise ParseError(f"unsupported format {fmt!r}, expected {ACTION_FORMAT!r}", "format")
    atoms = _field(doc, "atoms", list, "document")
    if not atoms:
        raise ParseError("at least one atom is required", "atoms")
    ids, weights = [], []
    for i, a in enumerate(atoms):
        where = f"atoms[{i}]"
        if not isinstance(a, dict):
            raise ParseError("atom entries must be objects", where)
        aid = _field(a, "id", str, where)
        ids.append(aid)
        weights.append(parse_fraction(a.get("weight"), f"{where}.weight"))
    pos = {}
    for i, aid in enumerate(ids):
        if aid in pos:
            raise ParseError(f"duplicate atom id {aid!r}", f"atoms[{i}].id")
        pos[aid] = i
    for i, w in enumerate(weights):
        if w <= 0:
            raise ParseError("weights must be positive", f"atoms[{i}].weight")
    total = sum(weights, Fraction(0))
    if total != 1:
        raise ParseError(f"weights sum to {fraction_text(total)}, not 1", "atoms")
    space = AtomSpace(tuple(weights), tuple(ids))
    names, perms = [], []
    for j, g in enumerate(doc.get("generators", [])):
        where = f"generators[{j}]"
        if not isinstance(g, dict):
            raise ParseError("generator entries must be objects", where)
        name = _field(g, "name", str, where)
        perm = _field(g, "perm", list, where)
        if len(perm) != len(ids):
            raise ParseError(f"permutation has {len(perm)} entries for {len(ids)} atoms", f"{where}.perm")
        try:
            p = tuple(pos[v] for v in perm)
        except (KeyError, TypeError):
            bad = next(v for v in perm if not isinstance(v, str) or v not in pos)
            raise ParseError(f"unknown atom id {bad!r}", f"{where}.perm") from None
        if len(set(p)) != len(p):
            raise ParseError("not a permutation: an atom is hit twice", f"{where}.perm")
        for x, y in enumerate(p):
            if weights[x] != weights[y]:
                raise ParseError(f"generator {name} maps atom {ids[x]} (weight {fraction_text(weights[x])}) "
                                 f"onto atom {ids[y]} (weight {fraction_text(weights[y])})", f"{where}.perm")
        names.append(name)
        perms.append(p)
    if len(set(names)) != len(names):
        raise ParseError("generator names must be distinct", "generators")
    action = Action(space, tuple(names), tuple(perms))
    events = {}
    for name, members in (doc.get("events") or {}).items():
        where = f"events.{name}"
        if not isinstance(members, list) or any(m not in pos for m in members):
            raise ParseError("events are lists of atom ids", where)
        events[name] = Event(space, frozenset(pos[m] for m in members))
    return action, events


def parse_action(text: str) -> tuple:
    return action_from_dict(_load(text))


def action_to_dict(action: Action, events: Mapping[str, Event] = None) -> dict:
    labels = action.space.labels
    doc = {
        "format": ACTION_FORMAT,
        "atoms": [{"id": labels[x], "weight": fraction_text(w)} for x, w in enumerate(action.space.weights)],
        "generators": [{"name": n, "perm": [labels[y] for y in p]} for n, p in zip(action.names, action.perms)],
    }
    if events:
        doc["events"] = {k: [labels[x] for x in sorted(e.atoms)] for k, e in events.items()}
    return doc


def serialize_action(action: Action, events: Mapping[str, Event] = None) -> str:
    return canonical_json(action_to_dict(action, events))


def read_action(path: str) -> tuple:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(str(e), path) from None
    try:
        return parse_action(text)
    except ParseError as e:
        raise ParseError(e.message, f"{path}: {e.location}") from None


def witness_to_dict(w) -> dict:
    def ref(r: Refinement):
        return {"parent": list(r.parent)}

    return {
        "format": WITNESS_FORMAT,
        "alpha_hat": action_to_dict(w.alpha_hat),
        "beta_hat": action_to_dict(w.beta_hat),
        "refined_alpha": ref(w.ref_alpha),
        "refined_beta": ref(w.ref_beta),
        "rho": list(w.rho),
        "error_atoms": sorted(w.error.atoms),
        "measured": fraction_text(w.measured),
        "bound": fraction_text(w.bound),
        "mu_E": fraction_text(w.mu_E),
        "words": [list(x.letters) for x in w.words],
    }


def witness_from_dict(doc: Mapping, alpha: Action, beta: Action):
    from .action import Word
    from .conjugacy import ConjugacyWitness

    if doc.get("format") != WITNESS_FORMAT:
        raise ParseError(f"unsupported format {doc.get('format')!r}", "format")
    ah, _ = action_from_dict(_field(doc, "alpha_hat", dict, "document"))
    bh, _ = action_from_dict(_field(doc, "beta_hat", dict, "document"))
    try:
        ra = Refinement(alpha.space, ah.space, tuple(_field(doc["refined_alpha"], "parent", list, "refined_alpha")))
        rb = Refinement(beta.space, bh.space, tuple(_field(doc["refined_beta"], "parent", list, "refined_beta")))
    except InvalidInputError as e:
        raise ParseError(str(e), "refined") from None
    rho = _field(doc, "rho", list, "document")
    err = Event(ah.space, frozenset(_field(doc, "error_atoms", list, "document")))
    return ConjugacyWitness(
        ah, bh, ra, rb, tuple(rho), err,
        parse_fraction(doc.get("measured"), "measured"), parse_fraction(doc.get("bound"), "bound"),
        parse_fraction(doc.get("mu_E"), "mu_E"),
        tuple(Word(tuple(x)) for x in _field(doc, "words", list, "document")),
    )


def parse_witness(text: str, alpha: Action, beta: Action):
    return witness_from_dict(_load(text), alpha, beta)


def jsonable(obj):
    """Convert report values: Fractions become "p/q", tuples lists, Events sorted atom lists."""
    if isinstance(obj, Fraction):
        return fraction_text(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Event):
        return sorted(obj.atoms)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [jsonable(v) for v in obj]
        return sorted(items, key=repr) if isinstance(obj, (set, frozenset)) else items
    return str(obj)
