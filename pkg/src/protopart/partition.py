"""Protection domains: merge strategies, communication policy, overhead metrics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .library import CONST, FALLBACK_WEIGHT, TRANSFORM
from .model import (
    Assignment,
    Channel,
    Domain,
    Domains,
    Guarantee,
    Network,
    domain_guarantee,
    domain_of,
    instance_guarantee,
    move_instance,
    successor,
)
from .rules import CONF, INTG, Atom

STRATEGIES = ("none", "basic", "const", "branch")

CLASS_NONE = "none"
CLASS_INTG = "intg"
CLASS_CONF_INTG = "conf_intg"


@dataclass(frozen=True, order=True)
class PolicyEntry:
    channel: Channel
    src_domain: str
    dst_domain: str
    required: Guarantee

    def __str__(self) -> str:
        return (
            f"{self.src_domain} -> {self.dst_domain}  {self.channel}  "
            f"conf={'true' if self.required.conf else 'false'} intg={'true' if self.required.intg else 'false'}"
        )


@dataclass(frozen=True)
class Metrics:
    process_count: int
    ipc_channel_count: int
    tcb_none: int
    tcb_intg: int
    tcb_conf_intg: int

    @property
    def tcb_total(self) -> int:
        """Code that has to be trusted for some guarantee."""
        return self.tcb_intg + self.tcb_conf_intg

    @property
    def sloc_total(self) -> int:
        return self.tcb_none + self.tcb_total


def merge_none(net: Network, asg: Assignment) -> Domains:
    return tuple(Domain(f"K{i}", frozenset([name])) for i, name in enumerate(net.instances, 1))


def merge_basic(net: Network, asg: Assignment) -> Domains:
    """Connected instances with identical guarantees share a domain."""
    guarantee = {n: instance_guarantee(i, asg) for n, i in net.instances.items()}
    assigned: set[str] = set()
    domains: list[Domain] = []
    for seed in net.instances:
        if seed in assigned:
            continue
        members = {seed}
        assigned.add(seed)
        queue = deque([seed])
        while queue:
            cur = queue.popleft()
            for nb in net.neighbours(cur):
                if nb not in assigned and guarantee[nb] == guarantee[seed]:
                    assigned.add(nb)
                    members.add(nb)
                    queue.append(nb)
        domains.append(Domain(f"K{len(domains) + 1}", frozenset(members)))
    return tuple(domains)


def _sole_successor(net: Network, name: str) -> str | None:
    inst = net.instance(name)
    if len(inst.outputs) != 1:
        return None
    return successor(net, name, inst.outputs[0])


def _domain(domains: Domains, name: str) -> Domain:
    d = domain_of(domains, name)
    assert d is not None, name
    return d


def merge_const(net: Network, asg: Assignment, domains: Domains) -> Domains:
    """Move each constant into its successor's domain when that domain
    already provides at least the constant's guarantees."""
    for name, inst in net.instances.items():
        if inst.kind != CONST:
            continue
        succ = _sole_successor(net, name)
        if succ is None:
            continue
        target = _domain(domains, succ)
        if name in target.members:
            continue
        if domain_guarantee(target, net, asg).dominates(instance_guarantee(inst, asg)):
            domains = move_instance(domains, name, target)
    return domains


def samepart(net: Network, domains: Domains, name: str) -> Domain | None:
    """The single domain all outputs of ``name`` lead into, if there is one."""
    inst = net.instance(name)
    found: Domain | None = None
    for p in inst.outputs:
        succ = successor(net, name, p)
        if succ is None:
            return None
        d = _domain(domains, succ)
        if found is not None and d.id != found.id:
            return None
        found = d
    return found


def merge_branch(
    net: Network,
    asg: Assignment,
    domains: Domains,
    *,
    max_weight: int | None = None,
    weights: Mapping[str, int] | None = None,
) -> Domains:
    """Move const -> single-input transform chains into the domain their
    outputs feed, when that domain dominates both.

    With ``max_weight``, any other instance whose weight is at most
    ``max_weight`` and whose neighbours all sit in one dominating domain is
    moved there as well.
    """
    for name, inst in net.instances.items():
        if inst.kind != CONST:
            continue
        xform = _sole_successor(net, name)
        if xform is None or net.instance(xform).kind != TRANSFORM or len(net.instance(xform).inputs) != 1:
            continue
        target = samepart(net, domains, xform)
        if target is None:
            continue
        dg = domain_guarantee(target, net, asg)
        if dg.dominates(instance_guarantee(inst, asg)) and dg.dominates(
            instance_guarantee(net.instance(xform), asg)
        ):
            # move_instance only looks at the target's id, so a stale object is fine
            domains = move_instance(domains, name, target)
            domains = move_instance(domains, xform, target)
    if max_weight is not None:
        domains = _merge_light(net, asg, domains, max_weight, weights or {})
    return domains


def _merge_light(
    net: Network, asg: Assignment, domains: Domains, max_weight: int, weights: Mapping[str, int]
) -> Domains:
    for name, inst in net.instances.items():
        if weights.get(inst.kind, FALLBACK_WEIGHT) > max_weight:
            continue
        nbs = net.neighbours(name)
        if not nbs:
            continue
        ids = {_domain(domains, nb).id for nb in nbs}
        if len(ids) != 1:
            continue
        target = _domain(domains, nbs[0])
        if name in target.members:
            continue
        if domain_guarantee(target, net, asg).dominates(instance_guarantee(inst, asg)):
            domains = move_instance(domains, name, target)
    return domains


def renumber(domains: Domains) -> Domains:
    """Contiguous ids K1..Kn, keeping the relative order of existing ids."""
    ordered = sorted(domains, key=lambda d: int(d.id[1:]) if d.id[1:].isdigit() else 0)
    return tuple(Domain(f"K{i}", d.members) for i, d in enumerate(ordered, 1))


def partition(
    net: Network,
    asg: Assignment,
    strategy: str,
    *,
    max_weight: int | None = None,
    weights: Mapping[str, int] | None = None,
) -> Domains:
    """Run a strategy chain: branch builds on const, const on basic."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "none":
        return merge_none(net, asg)
    domains = merge_basic(net, asg)
    if strategy in ("const", "branch"):
        domains = merge_const(net, asg, domains)
    if strategy == "branch":
        domains = merge_branch(net, asg, domains, max_weight=max_weight, weights=weights)
    return renumber(domains)


def communication_policy(net: Network, domains: Domains, asg: Assignment) -> list[PolicyEntry]:
    out = []
    for ch in net.channels:
        s = _domain(domains, ch.src)
        d = _domain(domains, ch.dst)
        if s.id == d.id:
            continue
        required = Guarantee(asg[Atom(ch.src_port, CONF)], asg[Atom(ch.src_port, INTG)])
        out.append(PolicyEntry(ch, s.id, d.id, required))
    return sorted(out)


def guarantee_class(g: Guarantee) -> str:
    if g.conf:
        return CLASS_CONF_INTG
    if g.intg:
        return CLASS_INTG
    return CLASS_NONE


def metrics(net: Network, domains: Domains, asg: Assignment, weights: Mapping[str, int]) -> Metrics:
    tcb = {CLASS_NONE: 0, CLASS_INTG: 0, CLASS_CONF_INTG: 0}
    for d in domains:
        cls = guarantee_class(domain_guarantee(d, net, asg))
        for name in d.members:
            tcb[cls] += weights.get(net.instance(name).kind, FALLBACK_WEIGHT)
    return Metrics(
        process_count=len(domains),
        ipc_channel_count=len(communication_policy(net, domains, asg)),
        tcb_none=tcb[CLASS_NONE],
        tcb_intg=tcb[CLASS_INTG],
        tcb_conf_intg=tcb[CLASS_CONF_INTG],
    )


def monolithic_metrics(net: Network, weights: Mapping[str, int]) -> Metrics:
    """One process holding everything, trusted for both guarantees."""
    total = sum(weights.get(i.kind, FALLBACK_WEIGHT) for i in net.instances.values())
    return Metrics(1 if net.instances else 0, 0, 0, 0, total)
