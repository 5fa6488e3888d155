from pathlib import Path

import pytest

from protopart.model import Guarantee
from protopart.partition import Metrics, merge_none, metrics, monolithic_metrics, partition
from protopart.library import DEFAULT_WEIGHTS
from protopart.render import (
    STYLE_BOTH,
    STYLE_CONF,
    STYLE_INTG,
    STYLE_NONE,
    STYLE_UNKNOWN,
    metrics_kv,
    metrics_report,
    percent,
    reduction,
    render_dot,
    style_for,
)

from conftest import load

GOLDEN = Path(__file__).parent / "golden"


def test_styles():
    assert style_for(None) == STYLE_UNKNOWN == ("white", "solid")
    assert style_for(Guarantee(False, False)) == STYLE_NONE == ("gray", "solid")
    assert style_for(Guarantee(True, False)) == STYLE_CONF == ("red", "dashed")
    assert style_for(Guarantee(False, True)) == STYLE_INTG == ("blue", "dotted")
    assert style_for(Guarantee(True, True)) == STYLE_BOTH
    assert STYLE_BOTH[0] == "purple"


def test_unsolved_is_white():
    dot = render_dot(load("dh").network)
    nodes = [l for l in dot.splitlines() if "[label=" in l and "->" not in l]
    assert len(nodes) == 13
    assert all('fillcolor="white"' in l for l in nodes)


def test_solved_enc(enc):
    doc, asg = enc
    dot = render_dot(doc.network, asg)
    assert '"ks" [label="ks\\nenv", style="filled,dashed,bold", fillcolor="purple"' in dot
    assert '"in" [label="in\\nenv", style="filled,solid", fillcolor="gray"' in dot


def test_clusters(dh):
    doc, asg = dh
    doms = partition(doc.network, asg, "branch")
    dot = render_dot(doc.network, asg, doms)
    assert [l.strip() for l in dot.splitlines() if l.strip().startswith("subgraph")] == [
        'subgraph "cluster_K1" {', 'subgraph "cluster_K2" {', 'subgraph "cluster_K3" {'
    ]
    assert render_dot(doc.network, asg, doms) == dot


def test_golden(enc):
    doc, asg = enc
    dot = render_dot(doc.network, asg, partition(doc.network, asg, "basic"))
    assert dot == (GOLDEN / "enc_basic.dot").read_text()


@pytest.mark.parametrize(
    "part, whole, text",
    [(1, 8, "12.5%"), (1, 3, "33.3%"), (2, 3, "66.7%"), (1, 16, "6.3%"), (0, 5, "0.0%"), (1, 0, "n/a"), (5, 5, "100.0%")],
)
def test_percent_half_up(part, whole, text):
    assert percent(part, whole) == text


def test_reduction():
    assert reduction(3, 13) == "76.9%"
    assert reduction(3, 0) == "n/a"


def test_metrics_report(dh):
    doc, asg = dh
    net = doc.network
    mono = monolithic_metrics(net, DEFAULT_WEIGHTS)
    none = metrics(net, merge_none(net, asg), asg, DEFAULT_WEIGHTS)
    res = metrics(net, partition(net, asg, "branch"), asg, DEFAULT_WEIGHTS)
    text = metrics_report(mono, none, res, "branch")
    lines = text.splitlines()
    assert lines[0].split() == ["Processes", "IPC", "None", "Integrity", "Conf+Integrity", "TCB"]
    assert lines[1].split() == ["Monolithic", "1", "0", "0", "0", "320", "320"]
    assert "process reduction: 76.9%" in lines
    assert text.endswith(metrics_kv(res))


def test_kv():
    assert metrics_kv(Metrics(3, 2, 1, 0, 7)) == (
        "process_count=3\nipc_channels=2\ntcb_none=1\ntcb_intg=0\ntcb_conf_intg=7\n"
    )
