import json
import subprocess
import sys
from fractions import Fraction as Q

import pytest
from hypothesis import given

from conftest import actions, cyc
from pmplab.cli import main
from pmplab.errors import ParseError
from pmplab.io import action_to_dict, canonical_json, parse_action, serialize_action


def doc(weights, perms=(), events=None):
    d = {"format": "pmplab-action/1",
         "atoms": [{"id": str(i), "weight": w} for i, w in enumerate(weights)],
         "generators": [{"name": n, "perm": [str(v) for v in p]} for n, p in perms]}
    if events:
        d["events"] = events
    return json.dumps(d)


@given(actions(max_n=6, max_k=2))
def test_serialize_parse_round_trip(a):
    text = serialize_action(a)
    back, _ = parse_action(text)
    assert back == a
    assert serialize_action(back) == text


def test_weights_must_sum_to_one():
    with pytest.raises(ParseError) as e:
        parse_action(doc(["1/2", "1/3"]))
    assert e.value.location == "atoms" and "5/6" in e.value.message


def test_weight_changing_generator_names_both_atoms():
    with pytest.raises(ParseError) as e:
        parse_action(doc(["1/2", "1/4", "1/4"], [("g", [1, 0, 2])]))
    assert e.value.location == "generators[0].perm"
    assert "atom 0" in e.value.message and "atom 1" in e.value.message


@pytest.mark.parametrize("text,where", [
    ("{", "line 1 column 2"),
    (json.dumps({"format": "other/1"}), "format"),
    (doc(["1/2", "x"]), "atoms[1].weight"),
    (doc(["1/2", "1/2"], [("g", [0, 0])]), "generators[0].perm"),
    (doc(["1/2", "1/2"], [("g", [0, 7])]), "generators[0].perm"),
    (doc(["1/2", "1/2"], events={"A": ["5"]}), "events.A"),
])
def test_parse_errors_are_located(text, where):
    with pytest.raises(ParseError) as e:
        parse_action(text)
    assert e.value.location == where


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def write(tmp_path, name, action, events=None):
    p = tmp_path / name
    p.write_text(canonical_json(action_to_dict(action, events)))
    return str(p)


def test_gen_documents(capsys):
    code, out = run(capsys, "gen", "cyclic", "4")
    assert code == 0
    assert parse_action(out)[0] == cyc(4)
    _, one = run(capsys, "gen", "random", "6", "2", "--seed", "7")
    _, two = run(capsys, "gen", "random", "6", "2", "--seed", "7")
    assert one == two
    _, triv = run(capsys, "gen", "random", "5", "0", "--seed", "1")
    assert parse_action(triv)[0].k == 0
    code, out = run(capsys, "gen", "coset", "3", "g=(0 1 2)")
    assert code == 0 and parse_action(out)[0].perms == ((1, 2, 0),)


def test_irs_and_cylinder_commands(tmp_path, capsys):
    f = write(tmp_path, "c4c2.json", parse_action(run(capsys, "gen", "orbits", "4,2")[1])[0])
    code, out = run(capsys, "irs", f)
    assert code == 0 and json.loads(out)["classes"] == 2
    code, out = run(capsys, "cyl", f, "--fix", "g^2", "--move", "g")
    assert json.loads(out)["value"] == "1/3"
    c4 = write(tmp_path, "c4.json", cyc(4))
    code, out = run(capsys, "irs-eq", f, c4)
    assert code == 0 and json.loads(out)["equal"] is False


def test_conj_and_verify(tmp_path, capsys):
    a = write(tmp_path, "a.json", cyc(2))
    two = parse_action(doc(["1/4"] * 4, [("g", [1, 0, 3, 2])]))[0]
    b = write(tmp_path, "b.json", two)
    wpath = str(tmp_path / "w.json")
    code, out = run(capsys, "conj", a, b, "--exact", "-o", wpath)
    assert code == 0 and json.loads(out)["exact"] is True
    code, out = run(capsys, "conj-verify", a, b, wpath)
    assert code == 0 and json.loads(out)["ok"] is True
    w = json.loads(open(wpath).read())
    w["bound"] = "0/1"
    w["rho"][0], w["rho"][1] = w["rho"][1], w["rho"][1]
    open(wpath, "w").write(json.dumps(w))
    code, out = run(capsys, "conj-verify", a, b, wpath)
    assert code == 1 and json.loads(out)["status"] == "precondition-failed"


def test_conj_precondition_exit_code(tmp_path, capsys):
    code, out = run(capsys, "conj", write(tmp_path, "a.json", cyc(4)), write(tmp_path, "b.json", cyc(2)))
    assert code == 1
    assert "class" in json.loads(out)["witness"]


def test_decomp_and_du(tmp_path, capsys):
    f = write(tmp_path, "c12.json", cyc(12))
    code, out = run(capsys, "decomp", f, "--bound", "4", "--strategy", "exact")
    rep = json.loads(out)
    assert code == 0 and rep["mu_E"] == "1/2" and len(rep["cut"]) == 3
    a = write(tmp_path, "a.json", parse_action(doc(["1/4"] * 4, [("g", [1, 2, 3, 0])]))[0])
    b = write(tmp_path, "b.json", parse_action(doc(["1/4"] * 4, [("g", [1, 3, 0, 2])]))[0])
    assert json.loads(run(capsys, "du", a, b)[1])["distance"] == "1/2"


def test_support_indep_tp_eval(tmp_path, capsys):
    ev = {"A": ["2", "3"], "B": ["1", "3"], "C": ["0", "1"]}
    a, events = parse_action(doc(["1/4"] * 4, [("g", [1, 2, 3, 0])], ev))
    f = write(tmp_path, "c4.json", a, events)
    rep = json.loads(run(capsys, "support", f, "--word", "g")[1])
    assert rep["a0"] == ["0", "2"] and rep["measure"] == "1/1"
    assert json.loads(run(capsys, "indep", f, "--a", "A", "--b", "B")[1])["independent"] is True
    assert json.loads(run(capsys, "tp", f, "--a", "A", "--b", "C")[1])["equal"] is True
    rep = json.loads(run(capsys, "eval", f, '(mu (sym x (w "g" x)))', "--assign", "x=A")[1])
    assert rep["value"] == "1/2"
    rep = json.loads(run(capsys, "check-axioms", f, "--F", "g^2")[1])
    assert rep["ok"] is True


def test_join_amalg_demo(tmp_path, capsys):
    c2 = write(tmp_path, "c2.json", cyc(2))
    out = str(tmp_path / "z.json")
    code, rep = run(capsys, "join", c2, c2, "-o", out)
    assert code == 0 and json.loads(rep)["atoms"] == 4
    assert "document" not in json.loads(rep)
    assert len(parse_action(open(out).read())[0].space) == 4
    code, rep = run(capsys, "gen", "cyclic", "5", "-o", out)
    assert json.loads(rep) == {"atoms": 5, "generators": ["g"], "written": out}
    ident = write(tmp_path, "e.json", parse_action(doc(["1/1"]))[0])
    rep = json.loads(run(capsys, "demo-qe", ident, c2)[1])
    assert rep["F"] == ["g"] and rep["value_alpha"] == "0/1" and rep["value_beta"] == "1/4"
    ev = {"all": ["0", "1"]}
    a, events = parse_action(doc(["1/2", "1/2"], [("g", [1, 0])], ev))
    f = write(tmp_path, "c2e.json", a, events)
    code, rep = run(capsys, "amalg", f, f, "--blocks-a", "all", "--blocks-b", "all", "--require", "g")
    assert code == 0 and json.loads(rep)["atoms"] == 4


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(doc(["1/2", "1/3"]))
    code = main(["irs", str(bad)])
    err = capsys.readouterr().err
    assert code == 2
    assert "bad.json: atoms: weights sum to 5/6" in err


def test_human_output(tmp_path, capsys):
    f = write(tmp_path, "c12.json", cyc(12))
    code, out = run(capsys, "decomp", f, "--bound", "4", "--human")
    assert code == 0 and "decimal approx." in out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pmplab", "gen", "cyclic", "3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert parse_action(proc.stdout)[0].space.weights == (Q(1, 3),) * 3
