import random

import pytest

from protopart import rules
from protopart.analysis import (
    AnalysisError,
    Conflict,
    annotate_conflict,
    brute_force_lexmin,
    collect_constraints,
    enumerate_lexmin,
    extract_conflict,
    format_assignment,
    is_satisfiable,
    make_constraints,
    solve_lexmin,
)
from protopart.model import Channel, StructureError
from protopart.modelio import ModelDocument, parse_model
from protopart.rules import FALSE, TRUE, And, Iff, Implies, Not, Or, conf, intg
from protopart.synth import random_network

from conftest import load, tampered_dh
from reference import ENC_FACTS, dh_expected


def test_collect_counts_and_labels():
    doc = load("enc")
    cs = collect_constraints(doc)
    assert len(cs) == len(doc.network.instances) + len(doc.network.channels)
    labels = [c.label for c in cs.constraints]
    assert "env:ks" in labels and "rule:us" in labels and "rule:enc" in labels
    assert "chan:iv.Const -> enc.Ctr" in labels
    assert len(cs.atoms) == 2 * 8


def test_collect_rejects_structural_errors():
    doc = parse_model("<model><transform id='t'><arg name='i'/></transform></model>")
    with pytest.raises(StructureError):
        collect_constraints(doc)


def test_enc_facts(enc):
    _, asg = enc
    for atom, value in ENC_FACTS.items():
        assert asg[atom] is value


def test_dh_solution(dh):
    _, asg = dh
    for atom, value in dh_expected().items():
        assert asg[atom] is value, atom


def test_lexmin_small_cases():
    x, y = conf("a.x"), intg("a.x")
    assert solve_lexmin(make_constraints([("c", TRUE)], [x, y])) == {x: False, y: False}
    assert solve_lexmin(make_constraints([("c", x)], [x, y])) == {x: True, y: False}
    # two minimal models; the lexicographically smaller one sets the later atom
    assert solve_lexmin(make_constraints([("c", Or((x, y)))])) == {x: False, y: True}
    assert solve_lexmin(make_constraints([])) == {}


def test_unsat_small_core():
    x, y = conf("a.x"), intg("a.x")
    cs = make_constraints([("one", x), ("noise", Implies(y, x)), ("two", Not(x)), ("three", y)])
    r = solve_lexmin(cs)
    assert isinstance(r, Conflict)
    assert r.core == ("one", "two")
    assert r.touched_instances == ("a",)
    assert "one: conf(a.x)" in r.listing()


def test_false_constant_is_its_own_core():
    r = solve_lexmin(make_constraints([("f", FALSE), ("t", TRUE)]))
    assert isinstance(r, Conflict) and r.core == ("f",)


def test_extract_conflict_requires_unsat():
    with pytest.raises(AnalysisError):
        extract_conflict(make_constraints([("t", TRUE)]))


def test_tampered_dh_conflict():
    doc = tampered_dh()
    cs = collect_constraints(doc)
    r = solve_lexmin(cs)
    assert isinstance(r, Conflict)
    assert Channel("Network", "gy", "decode", "gamma") in r.touched_channels
    assert {"Network", "decode", "sec", "Keystore"} <= set(r.touched_instances)
    assert not is_satisfiable(cs.subset(r.core))
    for label in r.core:
        assert is_satisfiable(cs.subset(set(r.core) - {label}))
    assert extract_conflict(cs).core == r.core


def test_annotate_conflict():
    doc = tampered_dh()
    r = solve_lexmin(collect_constraints(doc))
    text = annotate_conflict(doc, r)
    assert '<flow sarg="gy" sink="decode" darg="gamma" conflict="true"/>' in text
    assert 'id="Keystore"' in text and "env:Keystore" in text
    back = parse_model(text)
    assert len(back.network.instances) == len(doc.network.instances)
    with pytest.raises(AnalysisError):
        annotate_conflict(load("dh"), r)


def test_solution_satisfies_every_constraint(dh):
    doc, asg = dh
    for c in collect_constraints(doc).constraints:
        assert rules.eval_rule(c.expr, asg)


def test_lower_atoms_cannot_be_lowered(dh):
    # flipping any true atom to false (keeping the prefix) must be infeasible
    doc, asg = dh
    cs = collect_constraints(doc)
    atoms = list(cs.atoms)
    for i, a in enumerate(atoms):
        if not asg[a]:
            continue
        prefix = [("fix" + str(j), rules.fixed(b, asg[b])) for j, b in enumerate(atoms[:i])]
        trial = make_constraints([(c.label, c.expr) for c in cs.constraints] + prefix + [("low", Not(a))], atoms)
        assert not is_satisfiable(trial), a


def test_oracle_matches_plain_enumeration():
    rng = random.Random(3)
    checked = 0
    for _ in range(60):
        doc = random_network(rng, max_instances=6, max_ports=6)
        cs = collect_constraints(doc)
        plain = enumerate_lexmin(cs, cs.atoms)
        oracle = brute_force_lexmin(cs)
        assert (plain is None) == isinstance(oracle, Conflict)
        if plain is not None:
            assert plain == oracle
        checked += 1
    assert checked == 60


def test_oracle_limits():
    atoms = [conf(f"a.p{i}") for i in range(25)]
    with pytest.raises(ValueError):
        brute_force_lexmin(make_constraints([], atoms), max_atoms=24)
    assert brute_force_lexmin(make_constraints([], atoms)) == {a: False for a in atoms}
    with pytest.raises(ValueError):
        brute_force_lexmin(make_constraints([("c", conf("a.x"))]), [intg("a.x")])


def test_oracle_core_is_minimal():
    x, y, z = conf("a.x"), conf("a.y"), conf("a.z")
    cs = make_constraints([("a", x), ("b", Implies(x, y)), ("c", Iff(y, z)), ("d", Not(z)), ("e", And((x, x)))])
    # {a,b,c,d} and {e,b,c,d} are both minimal; either answer is fine
    for r in (brute_force_lexmin(cs), solve_lexmin(cs)):
        assert isinstance(r, Conflict)
        assert set(r.core) in ({"a", "b", "c", "d"}, {"e", "b", "c", "d"})


def test_format_assignment(enc):
    _, asg = enc
    text = format_assignment(asg)
    lines = text.splitlines()
    assert lines[0] == "conf(enc.Cipher) = false"
    assert "intg(enc.Key) = true" in lines
    assert len(lines) == len(asg)
    assert format_assignment({}) == ""


def test_empty_model_solves():
    assert solve_lexmin(collect_constraints(ModelDocument(parse_model("<model/>").network, []))) == {}
