"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary
(and immediately, when run with ``-s``). Time limits are wall clock.
"""

import random
import time
from contextlib import contextmanager

from protopart import primitives as P
from protopart.analysis import Conflict, brute_force_lexmin, collect_constraints, is_satisfiable, solve_lexmin
from protopart.cli import main
from protopart.model import domain_guarantee, domain_of, instance_guarantee
from protopart.modelio import parse_model, serialize_model
from protopart.partition import (
    STRATEGIES,
    communication_policy,
    merge_basic,
    merge_branch,
    merge_const,
    partition,
)
from protopart.executor import run_network
from protopart.synth import large_network, random_network

import conftest
from conftest import load, tampered_dh
from reference import ENC_FACTS, dh_expected

RANDOM_SEED = 20240611
RANDOM_COUNT = 200


@contextmanager
def criterion(n, title, limit=None):
    info = {}
    start = time.perf_counter()
    try:
        yield info
        elapsed = time.perf_counter() - start
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.2f} s, limit {limit} s"
    except BaseException as exc:
        line = f"[FAIL] criterion {n}: {title}: {exc}".splitlines()[0]
        conftest.ACCEPTANCE[n] = line
        print(line)
        raise
    timing = f"{elapsed:.3f} s" + (f" < {limit} s" if limit is not None else "")
    extra = "; ".join(f"{k}={v}" for k, v in info.items())
    line = f"[PASS] criterion {n}: {title} ({timing}{'; ' + extra if extra else ''})"
    conftest.ACCEPTANCE[n] = line
    print(line)


def _random_networks():
    rng = random.Random(RANDOM_SEED)
    return [random_network(rng, max_instances=12, max_ports=12) for _ in range(RANDOM_COUNT)]


def _safety(net, asg):
    """Criterion 6 on one network: domination and policy completeness for every strategy."""
    for s in STRATEGIES:
        doms = partition(net, asg, s)
        for d in doms:
            dg = domain_guarantee(d, net, asg)
            for m in d.members:
                assert dg.dominates(instance_guarantee(net.instance(m), asg)), (s, m)
        policy = communication_policy(net, doms, asg)
        crossing = [p.channel for p in policy]
        assert len(crossing) == len(set(crossing))
        for ch in net.channels:
            intra = domain_of(doms, ch.src).id == domain_of(doms, ch.dst).id
            assert intra != (ch in crossing), (s, ch)


def _monotone(net, asg):
    counts = [len(partition(net, asg, s)) for s in STRATEGIES]
    assert counts == sorted(counts, reverse=True), counts
    return counts


def test_criterion_1_counter_mode_facts():
    with criterion(1, "counter-mode example: four facts hold exactly", limit=1.0) as info:
        asg = solve_lexmin(collect_constraints(load("enc")))
        for atom, value in ENC_FACTS.items():
            assert asg[atom] is value, f"{atom} = {asg[atom]}, expected {value}"
        info["facts"] = len(ENC_FACTS)


def test_criterion_2_diffie_hellman_solution():
    with criterion(2, "Diffie-Hellman assignment matches the hand derivation", limit=1.0) as info:
        asg = solve_lexmin(collect_constraints(load("dh")))
        expected = dh_expected()
        wrong = [str(a) for a, v in expected.items() if asg[a] is not v]
        assert not wrong, f"mismatched: {', '.join(wrong)}"
        false_set = {"intg(sec.ssec)", "intg(sec.pub)", "conf(rng.len)", "conf(g.Const)", "conf(m.Const)",
                     "conf(pub.pub)"}
        assert {str(a) for a in expected if str(a) in false_set and not asg[a]} == false_set
        info["values checked"] = len(expected)


def test_criterion_3_contradiction():
    with criterion(3, "Keystore integrity assumption yields a minimal conflict through the incoming channel") as info:
        doc = tampered_dh()
        cs = collect_constraints(doc)
        r = solve_lexmin(cs)
        assert isinstance(r, Conflict), "expected UNSAT"
        assert {"Network", "decode"} <= set(r.touched_instances)
        assert any(str(ch) == "Network.gy -> decode.gamma" for ch in r.touched_channels)
        assert not is_satisfiable(cs.subset(r.core))
        for label in r.core:
            assert is_satisfiable(cs.subset(set(r.core) - {label})), f"{label} is redundant"
        info["core size"] = len(r.core)


def test_criterion_4_oracle_equivalence():
    with criterion(4, "solver agrees with the enumeration oracle", limit=60.0) as info:
        docs = [load("enc"), load("dh")] + _random_networks()
        unsat = 0
        for i, doc in enumerate(docs):
            cs = collect_constraints(doc)
            if i >= 2:
                assert len(doc.network.instances) <= 12 and len(cs.atoms) <= 24
            fast, slow = solve_lexmin(cs), brute_force_lexmin(cs)
            assert isinstance(fast, Conflict) == isinstance(slow, Conflict), f"verdicts differ on model {i}"
            if isinstance(fast, Conflict):
                unsat += 1
            else:
                assert fast == slow, f"assignments differ on model {i}"
        info["models"] = len(docs)
        info["unsat"] = unsat


def test_criterion_5_partitioning_narrative():
    with criterion(5, "merge narrative on Diffie-Hellman and domain-count monotonicity") as info:
        doc = load("dh")
        net = doc.network
        asg = solve_lexmin(collect_constraints(doc))

        def singleton_consts(doms):
            return [d for d in doms if len(d.members) == 1 and net.instance(next(iter(d.members))).kind == "const"]

        basic = merge_basic(net, asg)
        const = merge_const(net, asg, basic)
        branch = merge_branch(net, asg, const)
        assert singleton_consts(basic), "merge_basic left no singleton const domain"
        assert not singleton_consts(const), "merge_const left a singleton const domain"
        assert len(branch) < len(const)
        info["dh domains"] = f"{len(net.instances)}/{len(basic)}/{len(const)}/{len(branch)}"
        checked = 0
        for rdoc in _random_networks():
            r = solve_lexmin(collect_constraints(rdoc))
            if not isinstance(r, Conflict):
                _monotone(rdoc.network, r)
                checked += 1
        info["random sat networks"] = checked


def test_criterion_6_safety():
    with criterion(6, "domains dominate member requirements; every crossing channel is in the policy") as info:
        checked = 0
        for doc in [load("enc"), load("dh"), load("dh_two_party"), load("enc_roundtrip")] + _random_networks():
            r = solve_lexmin(collect_constraints(doc))
            if isinstance(r, Conflict):
                continue
            _safety(doc.network, r)
            checked += 1
        info["networks"] = checked


def test_criterion_7_execution():
    with criterion(7, "two-party secrets agree, counter mode round-trips, traces repeat", limit=10.0) as info:
        doc = load("dh_two_party")
        for seed in range(10):
            r = run_network(doc, seed=seed)
            assert r.ok, r.failures
            a, b = r.received["Keystore_a"]["data"], r.received["Keystore_b"]["data"]
            assert len(a) == 1 and a == b, f"seed {seed}"
        key, ctr = b"k" * 16, P.int_to_bytes(42)
        payload = bytes(random.Random(1).randrange(256) for _ in range(1024))
        for n in range(1025):
            c = P.enc_ctr_eval(None, {"Plain": payload[:n], "Key": key, "Ctr": ctr})["Cipher"]
            assert P.dec_ctr_eval(None, {"Cipher": c, "Key": key, "Ctr": ctr})["Plain"] == payload[:n]
        for name in ("dh_two_party", "enc_roundtrip"):
            traces = {run_network(load(name), seed=3).dump_trace() for _ in range(3)}
            assert len(traces) == 1
        info["seeds"] = 10


def test_criterion_8_scale(tmp_path, capsys):
    with criterion(8, "186-instance/285-channel generated network through the CLI pipeline", limit=30.0) as info:
        doc = large_network(random.Random(RANDOM_SEED))
        net = doc.network
        assert (len(net.instances), len(net.channels)) == (186, 285)
        path = tmp_path / "large.xml"
        path.write_text(serialize_model(doc))
        assert main(["analyze", str(path), "--dump", str(tmp_path / "asg.txt")]) == 0
        assert main(["partition", str(path), "--strategy", "branch", "--out", str(tmp_path / "p.xml")]) == 0
        assert main(["metrics", str(path), "--strategy", "branch"]) == 0
        assert main(["render", str(path), "--solved", "--partitions", "-o", str(tmp_path / "g.dot")]) == 0
        capsys.readouterr()
        reparsed = parse_model(path.read_text())
        asg = solve_lexmin(collect_constraints(reparsed))
        assert not isinstance(asg, Conflict)
        counts = _monotone(reparsed.network, asg)
        _safety(reparsed.network, asg)
        assert len(parse_model((tmp_path / "p.xml").read_text()).network.domains) == counts[-1]
        info["domains none/basic/const/branch"] = "/".join(map(str, counts))
        info["headline OTR figures"] = "not reproducible without the original model, documented only"
