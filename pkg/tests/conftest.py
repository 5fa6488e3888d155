import logging

import pytest

from protopart.analysis import collect_constraints, solve_lexmin
from protopart.modelio import bundled_model, parse_model


@pytest.fixture(autouse=True)
def _quiet(caplog):
    # generated networks leave outputs dangling; that warning is expected
    caplog.set_level(logging.ERROR, logger="protopart.model")


def load(name):
    return parse_model(bundled_model(name))


def solved(name):
    doc = load(name)
    return doc, solve_lexmin(collect_constraints(doc))


@pytest.fixture
def enc():
    return solved("enc")


@pytest.fixture
def dh():
    return solved("dh")


def tampered_dh():
    text = bundled_model("dh").replace(
        '<env id="Keystore" confidentiality="true"', '<env id="Keystore" confidentiality="true" integrity="true"'
    )
    assert text != bundled_model("dh")
    return parse_model(text)


# criterion number -> summary line, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
