"""In-memory protocol model: primitives, instances, channels, networks, domains."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from . import rules
from .rules import Atom, RuleExpr

log = logging.getLogger(__name__)

INPUT = "input"
OUTPUT = "output"

Assignment = Mapping[Atom, bool]


class ModelError(Exception):
    """Base class for problems with a model."""


class StructureError(ModelError):
    def __init__(self, errors: Iterable[str]) -> None:
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class Guarantee(NamedTuple):
    conf: bool
    intg: bool

    def dominates(self, other: "Guarantee") -> bool:
        return self.conf >= other.conf and self.intg >= other.intg

    def __or__(self, other: "Guarantee") -> "Guarantee":  # type: ignore[override]
        return Guarantee(self.conf or other.conf, self.intg or other.intg)


NO_GUARANTEE = Guarantee(False, False)


@dataclass(frozen=True)
class PortName:
    local: str
    direction: str


@dataclass(frozen=True)
class PrimitiveSpec:
    """A node template. ``rule`` is written over local port names."""

    kind: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    rule: RuleExpr
    inline: bool = False  # rule came from the model, not the registry

    @property
    def ports(self) -> tuple[PortName, ...]:
        return tuple(PortName(p, INPUT) for p in self.inputs) + tuple(
            PortName(p, OUTPUT) for p in self.outputs
        )


@dataclass(frozen=True)
class Instance:
    name: str
    spec: PrimitiveSpec
    rule: RuleExpr
    attrs: Mapping[str, str] = field(default_factory=dict)
    config: Mapping[str, str] = field(default_factory=dict)
    description: str = ""

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.spec.inputs

    @property
    def outputs(self) -> tuple[str, ...]:
        return self.spec.outputs

    def port(self, local: str) -> str:
        return f"{self.name}.{local}"

    def atoms(self) -> list[Atom]:
        return rules.atoms_of_ports(self.port(p) for p in self.inputs + self.outputs)


def check_identifier(name: str, what: str) -> None:
    if not name:
        raise ModelError(f"empty {what} name")
    if "." in name or not name.isascii():
        raise ModelError(f"invalid {what} name {name!r}: must be ASCII without '.'")


def bind_instance(
    spec: PrimitiveSpec,
    instance_name: str,
    taken: Iterable[str] = (),
    *,
    attrs: Mapping[str, str] | None = None,
    config: Mapping[str, str] | None = None,
    description: str = "",
) -> Instance:
    """Instantiate ``spec`` under a globally unique name.

    Every local port atom ``p`` in the rule becomes ``<instance_name>.<p>``.
    """
    check_identifier(instance_name, "instance")
    if instance_name in set(taken):
        raise ModelError(f"duplicate instance name {instance_name!r}")
    declared = set(spec.inputs) | set(spec.outputs)
    undeclared = sorted({a.port for a in rules.iter_atoms(spec.rule)} - declared)
    if undeclared:
        raise ModelError(
            f"rule of {instance_name!r} ({spec.kind}) references undeclared ports: {', '.join(undeclared)}"
        )
    return Instance(
        name=instance_name,
        spec=spec,
        rule=rules.bind(spec.rule, instance_name),
        attrs=MappingProxyType(dict(attrs or {})),
        config=MappingProxyType(dict(config or {})),
        description=description,
    )


@dataclass(frozen=True, order=True)
class Channel:
    src: str
    out_port: str
    dst: str
    in_port: str

    @property
    def src_port(self) -> str:
        return f"{self.src}.{self.out_port}"

    @property
    def dst_port(self) -> str:
        return f"{self.dst}.{self.in_port}"

    def __str__(self) -> str:
        return f"{self.src_port} -> {self.dst_port}"


@dataclass(frozen=True)
class Domain:
    id: str
    members: frozenset[str]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError(f"domain {self.id} is empty")


Domains = tuple[Domain, ...]


class Network:
    """Instances and channels; the unit of analysis.

    Construction does not validate; see :func:`validate_network`.
    """

    def __init__(
        self,
        name: str,
        instances: Iterable[Instance],
        channels: Iterable[Channel],
        domains: Domains = (),
    ) -> None:
        self.name = name
        insts: dict[str, Instance] = {}
        for inst in sorted(instances, key=lambda i: i.name):
            if inst.name in insts:
                raise ModelError(f"duplicate instance name {inst.name!r}")
            insts[inst.name] = inst
        self.instances: Mapping[str, Instance] = MappingProxyType(insts)
        self.channels: tuple[Channel, ...] = tuple(sorted(set(channels)))
        self.domains: Domains = tuple(domains)
        self._into: dict[tuple[str, str], list[Channel]] = {}
        self._from: dict[tuple[str, str], list[Channel]] = {}
        for ch in self.channels:
            self._into.setdefault((ch.dst, ch.in_port), []).append(ch)
            self._from.setdefault((ch.src, ch.out_port), []).append(ch)

    def __repr__(self) -> str:
        return f"Network({self.name!r}, {len(self.instances)} instances, {len(self.channels)} channels)"

    def instance(self, name: str) -> Instance:
        try:
            return self.instances[name]
        except KeyError:
            raise ModelError(f"unknown instance {name!r}") from None

    def atoms(self) -> list[Atom]:
        out: list[Atom] = []
        for inst in self.instances.values():
            out.extend(inst.atoms())
        return sorted(out, key=Atom.sort_key)

    def channel_into(self, inst: str, in_port: str) -> Channel | None:
        chans = self._into.get((inst, in_port))
        return chans[0] if chans else None

    def channel_from(self, inst: str, out_port: str) -> Channel | None:
        chans = self._from.get((inst, out_port))
        return chans[0] if chans else None

    def neighbours(self, inst: str) -> list[str]:
        """Predecessors and successors of ``inst``, sorted, duplicate-free."""
        i = self.instance(inst)
        found = {predecessor(self, inst, p) for p in i.inputs}
        found |= {successor(self, inst, p) for p in i.outputs}
        found.discard(None)
        return sorted(found)  # type: ignore[arg-type]

    def with_domains(self, domains: Domains) -> "Network":
        return Network(self.name, self.instances.values(), self.channels, domains)


def predecessor(net: Network, inst: str, in_port: str) -> str | None:
    i = net.instance(inst)
    if in_port not in i.inputs:
        raise ModelError(f"{inst!r} has no input port {in_port!r}")
    ch = net.channel_into(inst, in_port)
    return ch.src if ch else None


def successor(net: Network, inst: str, out_port: str) -> str | None:
    i = net.instance(inst)
    if out_port not in i.outputs:
        raise ModelError(f"{inst!r} has no output port {out_port!r}")
    ch = net.channel_from(inst, out_port)
    return ch.dst if ch else None


# -- guarantees -------------------------------------------------------------


def instance_guarantee(inst: Instance, asg: Assignment) -> Guarantee:
    c = i = False
    for atom in inst.atoms():
        try:
            value = asg[atom]
        except KeyError:
            raise ModelError(f"assignment has no value for {atom}") from None
        if atom.kind == rules.CONF:
            c = c or value
        else:
            i = i or value
    return Guarantee(c, i)


def domain_guarantee(d: Domain, net: Network, asg: Assignment) -> Guarantee:
    g = NO_GUARANTEE
    for name in sorted(d.members):
        g = g | instance_guarantee(net.instance(name), asg)
    return g


def domain_of(domains: Iterable[Domain], inst: str) -> Domain | None:
    for d in domains:
        if inst in d.members:
            return d
    return None


def move_instance(domains: Domains, inst: str, target: Domain) -> Domains:
    """Move ``inst`` into ``target``; a domain left empty is dropped."""
    current = domain_of(domains, inst)
    if current is None:
        raise ModelError(f"instance {inst!r} is not assigned to a domain")
    if not any(d.id == target.id for d in domains):
        raise ModelError(f"unknown domain {target.id!r}")
    if current.id == target.id:
        return tuple(domains)
    out: list[Domain] = []
    for d in domains:
        if d.id == current.id:
            rest = d.members - {inst}
            if rest:
                out.append(Domain(d.id, rest))
        elif d.id == target.id:
            out.append(Domain(d.id, d.members | {inst}))
        else:
            out.append(d)
    return tuple(out)


# -- validation -------------------------------------------------------------


def validate_network(net: Network, *, env_kind: str = "env") -> list[str]:
    """Structural errors, sorted by instance name; empty means ok.

    Unconnected outputs are only logged as warnings.
    """
    errors: list[tuple[str, str]] = []
    for inst in net.instances.values():
        clash = sorted(set(inst.inputs) & set(inst.outputs))
        if clash:
            errors.append((inst.name, f"{inst.name}: ports used as input and output: {', '.join(clash)}"))
    for ch in net.channels:
        src = net.instances.get(ch.src)
        dst = net.instances.get(ch.dst)
        if src is None:
            errors.append((ch.src, f"{ch}: unknown source instance {ch.src!r}"))
        elif ch.out_port not in src.outputs:
            errors.append((ch.src, f"{ch}: {ch.src!r} has no output port {ch.out_port!r}"))
        if dst is None:
            errors.append((ch.dst, f"{ch}: unknown destination instance {ch.dst!r}"))
        elif ch.in_port not in dst.inputs:
            errors.append((ch.dst, f"{ch}: {ch.dst!r} has no input port {ch.in_port!r}"))
        if ch.src == ch.dst:
            errors.append((ch.src, f"{ch}: channel connects {ch.src!r} to itself"))
    for (dst, port), chans in sorted(net._into.items()):
        if len(chans) > 1:
            errors.append((dst, f"{dst}.{port}: {len(chans)} incoming channels"))
    for (src, port), chans in sorted(net._from.items()):
        if len(chans) > 1:
            errors.append((src, f"{src}.{port}: {len(chans)} outgoing channels (use a transform to branch)"))
    for inst in net.instances.values():
        for p in inst.inputs:
            if inst.kind != env_kind and not net._into.get((inst.name, p)):
                errors.append((inst.name, f"{inst.name}.{p}: input port is not connected"))
        for p in inst.outputs:
            if not net._from.get((inst.name, p)):
                log.warning("%s.%s: output port is not connected", inst.name, p)
    if net.domains:
        seen: dict[str, str] = {}
        for d in net.domains:
            for m in sorted(d.members):
                if m not in net.instances:
                    errors.append((m, f"domain {d.id} contains unknown instance {m!r}"))
                elif m in seen:
                    errors.append((m, f"{m} is in domains {seen[m]} and {d.id}"))
                else:
                    seen[m] = d.id
        for name in net.instances:
            if name not in seen:
                errors.append((name, f"{name} is not in any domain"))
    return [msg for _, msg in sorted(errors)]
