"""XML model format and the SLOC weight file.

A model looks like::

    <model name="dh">
      <dhsec id="sec">
        <description>Derive the shared secret (initiator)</description>
        <flow sarg="ssec" sink="Keystore" darg="data">
          <assert confidentiality="true">Shared secret leaks if this channel is readable.</assert>
        </flow>
      </dhsec>
      <env id="Keystore" confidentiality="true" code="print">
        <config mode="server" port="12001"/>
        <arg name="data"/>
      </env>
    </model>

Each child of ``<model>`` is an instance whose tag is the primitive kind.
"""

from __future__ import annotations

import logging
import re
from importlib import resources
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import library, rules
from .library import DEFAULT_WEIGHTS
from .model import (
    Assignment,
    Channel,
    Domain,
    Domains,
    Instance,
    ModelError,
    Network,
    domain_of,
    instance_guarantee,
)
from .rules import Atom, RuleSyntaxError

log = logging.getLogger(__name__)

# attributes with a fixed meaning; never carried through as opaque instance attributes
_RESERVED = {"id", "confidentiality", "integrity", "conf", "intg", "partition", "conflict"}


class ModelParseError(ModelError):
    pass


@dataclass(frozen=True)
class Assertion:
    channel: Channel
    require_conf: bool | None
    require_intg: bool | None
    message: str = ""

    def __post_init__(self) -> None:
        if self.require_conf is None and self.require_intg is None:
            raise ModelError(f"assertion on {self.channel} requires neither confidentiality nor integrity")


@dataclass
class ModelDocument:
    network: Network
    assertions: list[Assertion] = field(default_factory=list)

    @property
    def env_assumptions(self) -> list[tuple[str, bool, bool]]:
        out = []
        for inst in self.network.instances.values():
            a = library.env_assumption(inst)
            if a is not None:
                out.append((inst.name, *a))
        return out

    @property
    def exec_bindings(self) -> dict[str, Mapping[str, str]]:
        return {n: i.config for n, i in self.network.instances.items()}


def _bool(value: str | None, where: str) -> bool | None:
    if value is None:
        return None
    if value not in ("true", "false"):
        raise ModelParseError(f"{where}: malformed boolean {value!r} (expected true or false)")
    return value == "true"


def _text(el: ET.Element | None) -> str:
    if el is None or el.text is None:
        return ""
    return " ".join(el.text.split())


def parse_model(text: str) -> ModelDocument:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ModelParseError(f"malformed XML: {exc}") from None
    if root.tag != "model":
        raise ModelParseError(f"root element must be <model>, not <{root.tag}>")

    instances: dict[str, Instance] = {}
    flows: list[tuple[str, ET.Element]] = []
    placed: dict[str, set[str]] = {}
    for el in root:
        kind = el.tag
        name = el.get("id")
        if not name:
            raise ModelParseError(f"<{kind}> element without id")
        where = f"<{kind} id={name!r}>"
        if name in instances:
            raise ModelParseError(f"duplicate instance id {name!r}")

        rule = None
        rule_el = el.find("rule")
        if rule_el is not None:
            try:
                rule = rules.parse_rule(rule_el.text or "")
            except RuleSyntaxError as exc:
                raise ModelParseError(f"{where}: bad rule: {exc}") from None
        elif not library.is_registered(kind):
            raise ModelParseError(f"{where}: unknown primitive kind {kind!r} and no inline <rule>")

        args = []
        for a in el.findall("arg"):
            arg = a.get("name")
            if not arg:
                raise ModelParseError(f"{where}: <arg> without name")
            args.append(arg)
        sargs: list[str] = []
        for f in el.findall("flow"):
            s = f.get("sarg")
            if not s:
                raise ModelParseError(f"{where}: <flow> without sarg")
            if s not in sargs:
                sargs.append(s)
            flows.append((name, f))

        fin, fout = library.fixed_ports(kind)
        if fin is not None:
            stray = [a for a in args if a not in fin]
            if stray:
                raise ModelParseError(f"{where}: {kind} has no input port {stray[0]!r}")
            inputs = fin
        else:
            inputs = tuple(args)
        if fout is not None:
            stray = [s for s in sargs if s not in fout]
            if stray:
                raise ModelParseError(f"{where}: sarg {stray[0]!r} is not an output of {kind}")
            outputs = fout
        else:
            outputs = tuple(sargs)

        c = _bool(el.get("confidentiality"), where) or False
        i = _bool(el.get("integrity"), where) or False
        if el.get("partition") is not None:
            placed.setdefault(el.get("partition", ""), set()).add(name)
        config_el = el.find("config")
        try:
            instances[name] = library.make_instance(
                kind,
                name,
                inputs,
                outputs,
                conf=c,
                intg=i,
                rule=rule,
                attrs={k: v for k, v in el.attrib.items() if k not in _RESERVED},
                config=dict(config_el.attrib) if config_el is not None else {},
                description=_text(el.find("description")),
            )
        except ModelError as exc:
            raise ModelParseError(str(exc)) from None

    channels: list[Channel] = []
    assertions: list[Assertion] = []
    for src, f in flows:
        sink, darg = f.get("sink"), f.get("darg")
        if not sink or not darg:
            raise ModelParseError(f"flow from {src!r} needs sink and darg")
        if sink not in instances:
            raise ModelParseError(f"flow {src}.{f.get('sarg')}: sink {sink!r} not found")
        if darg not in instances[sink].inputs:
            raise ModelParseError(f"flow {src}.{f.get('sarg')}: {sink!r} has no input port {darg!r}")
        ch = Channel(src, f.get("sarg", ""), sink, darg)
        channels.append(ch)
        for a in f.findall("assert"):
            where = f"assertion on {ch}"
            rc = _bool(a.get("confidentiality"), where)
            ri = _bool(a.get("integrity"), where)
            if rc is None and ri is None:
                raise ModelParseError(f"{where}: needs a confidentiality or integrity attribute")
            assertions.append(Assertion(ch, rc, ri, _text(a)))

    domains: tuple[Domain, ...] = ()
    if placed:
        missing = sorted(set(instances) - set().union(*placed.values()))
        if missing:
            raise ModelParseError(f"partition attribute missing on {', '.join(missing)}")
        domains = tuple(Domain(k, frozenset(v)) for k, v in sorted(placed.items(), key=lambda kv: _domain_key(kv[0])))
    net = Network(root.get("name", ""), instances.values(), channels, domains)
    return ModelDocument(net, assertions)


def _domain_key(ident: str) -> tuple[int, str]:
    digits = ident[1:]
    return (int(digits) if digits.isdigit() else -1, ident)


# -- serialization ----------------------------------------------------------


def _tf(v: bool) -> str:
    return "true" if v else "false"


def _build(
    doc: ModelDocument,
    asg: Assignment | None = None,
    domains: Domains | None = None,
    conflict_instances: Iterable[str] = (),
    conflict_channels: Iterable[Channel] = (),
) -> ET.Element:
    net = doc.network
    hot_insts = set(conflict_instances)
    hot_chans = set(conflict_channels)
    by_channel: dict[Channel, list[Assertion]] = {}
    for a in doc.assertions:
        by_channel.setdefault(a.channel, []).append(a)

    root = ET.Element("model")
    if net.name:
        root.set("name", net.name)
    for inst in net.instances.values():
        el = ET.SubElement(root, inst.kind)
        el.set("id", inst.name)
        for k in sorted(inst.attrs):
            el.set(k, inst.attrs[k])
        if domains is not None:
            d = domain_of(domains, inst.name)
            if d is None:
                raise ModelError(f"instance {inst.name!r} has no domain")
            el.set("partition", d.id)
        if asg is not None:
            g = instance_guarantee(inst, asg)
            el.set("conf", _tf(g.conf))
            el.set("intg", _tf(g.intg))
        if inst.name in hot_insts:
            el.set("conflict", "true")
        if inst.description:
            ET.SubElement(el, "description").text = inst.description
        if inst.spec.inline:
            ET.SubElement(el, "rule").text = rules.format_rule(inst.spec.rule)
        if inst.config:
            cfg = ET.SubElement(el, "config")
            for k in sorted(inst.config):
                cfg.set(k, inst.config[k])
        fin, _ = library.fixed_ports(inst.kind)
        if fin is None:
            for p in inst.inputs:
                arg = ET.SubElement(el, "arg", name=p)
                if asg is not None:
                    _annotate(arg, asg, inst.port(p))
        for p in inst.outputs:
            ch = net.channel_from(inst.name, p)
            if ch is None:
                continue
            flow = ET.SubElement(el, "flow", sarg=ch.out_port, sink=ch.dst, darg=ch.in_port)
            if asg is not None:
                _annotate(flow, asg, ch.src_port)
            if ch in hot_chans:
                flow.set("conflict", "true")
            for a in by_channel.get(ch, ()):
                ae = ET.SubElement(flow, "assert")
                if a.require_conf is not None:
                    ae.set("confidentiality", _tf(a.require_conf))
                if a.require_intg is not None:
                    ae.set("integrity", _tf(a.require_intg))
                if a.message:
                    ae.text = a.message
    return root


def _annotate(el: ET.Element, asg: Assignment, port: str) -> None:
    try:
        el.set("conf", _tf(asg[Atom(port, rules.CONF)]))
        el.set("intg", _tf(asg[Atom(port, rules.INTG)]))
    except KeyError as exc:
        raise ModelError(f"assignment is not total: {exc}") from None


def _to_text(root: ET.Element, comment: str | None = None) -> str:
    if comment is not None:
        # "--" is not allowed inside XML comments
        root.insert(0, ET.Comment(" " + comment.replace("--", "- -") + " "))
    ET.indent(root, space="  ")
    # ElementTree escapes '>' inside attribute values, so this only hits tag ends
    return ET.tostring(root, encoding="unicode").replace(" />", "/>") + "\n"


def serialize_model(doc: ModelDocument) -> str:
    """Canonical model text; keeps the network's domains if it has any."""
    return _to_text(_build(doc, domains=doc.network.domains or None))


def serialize_annotated(doc: ModelDocument, asg: Assignment, domains: Domains | None = None) -> str:
    """Model text with solved guarantees on every port reference and, given
    ``domains``, a ``partition`` attribute on every instance."""
    return _to_text(_build(doc, asg, domains))


def serialize_conflict(
    doc: ModelDocument,
    instances: Iterable[str],
    channels: Iterable[Channel],
    listing: str,
) -> str:
    return _to_text(_build(doc, conflict_instances=instances, conflict_channels=channels), "\n" + listing)


# -- weights ----------------------------------------------------------------

_WEIGHT_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?\d+)\s*$")


def parse_weights(text: str) -> dict[str, int]:
    """``kind = integer`` lines with ``#`` comments, applied over the defaults."""
    weights = dict(DEFAULT_WEIGHTS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _WEIGHT_LINE.match(line)
        if not m:
            raise ModelParseError(f"weights line {lineno}: expected 'kind = integer', got {raw!r}")
        kind, value = m.group(1), int(m.group(2))
        if value < 0:
            raise ModelParseError(f"weights line {lineno}: negative weight for {kind!r}")
        if kind not in DEFAULT_WEIGHTS:
            log.warning("weights line %d: unknown kind %r ignored", lineno, kind)
            continue
        weights[kind] = value
    return weights


def bundled_models() -> list[str]:
    """Names of the example models shipped with the package."""
    root = resources.files("protopart") / "models"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".xml"))


def bundled_model(name: str) -> str:
    """Text of a shipped example model, e.g. ``bundled_model("dh")``."""
    return (resources.files("protopart") / "models" / f"{name}.xml").read_text(encoding="utf-8")
