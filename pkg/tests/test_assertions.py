import pytest

from protopart.analysis import collect_constraints, solve_lexmin
from protopart.assertions import check_assertions
from protopart.model import Channel, ModelError
from protopart.modelio import Assertion, ModelDocument, bundled_model, parse_model
from protopart.rules import Atom, intg

from conftest import load


def test_dh_assertion_holds(dh):
    doc, asg = dh
    assert len(doc.assertions) == 1
    assert check_assertions(doc, asg) == []


def test_failing_assertion():
    text = bundled_model("dh").replace('<assert confidentiality="true">', '<assert confidentiality="true" integrity="true">')
    doc = parse_model(text)
    asg = solve_lexmin(collect_constraints(doc))
    (v,) = check_assertions(doc, asg)
    assert v.channel == Channel("sec", "ssec", "Keystore", "data")
    assert v.expected == (("conf", True), ("intg", True))
    assert v.actual == (("conf", True), ("intg", False))
    assert str(v).startswith("ASSERT FAIL sec.ssec -> Keystore.data: expected conf=true, intg=true, got conf=true, intg=false")


def test_no_assertions(enc):
    doc, asg = enc
    assert check_assertions(doc, asg) == []


def test_assignment_is_not_modified(dh):
    doc, asg = dh
    before = dict(asg)
    check_assertions(doc, asg)
    assert asg == before


def test_unknown_channel_and_missing_atom(enc):
    doc, asg = enc
    bogus = ModelDocument(doc.network, [Assertion(Channel("x", "p", "y", "q"), True, None, "")])
    with pytest.raises(ModelError):
        check_assertions(bogus, asg)
    real = ModelDocument(doc.network, [Assertion(Channel("enc", "Cipher", "in", "Msg"), None, False, "")])
    assert check_assertions(real, asg) == []
    partial = {k: v for k, v in asg.items() if k != Atom("enc.Cipher", "intg")}
    with pytest.raises(ModelError):
        check_assertions(real, partial)


def test_violations_are_sorted():
    doc = load("dh_two_party")
    text = bundled_model("dh_two_party").replace('<assert confidentiality="true">', '<assert integrity="true">')
    doc = parse_model(text)
    vs = check_assertions(doc, solve_lexmin(collect_constraints(doc)))
    assert len(vs) == 2 and vs == sorted(vs)
    assert intg("sec_a.ssec").port == vs[0].channel.src_port
