"""Registry of primitive kinds and their guarantee rules.

Fixed-port kinds declare their ports here. Variable-port kinds (``env``,
``const``, ``transform`` and model-defined kinds) take their inputs from the
model's ``<arg>`` elements and their outputs from its ``<flow>`` elements, and
build their rule from those port lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from . import rules
from .model import Instance, ModelError, PrimitiveSpec, bind_instance
from .rules import RuleExpr, all_of, any_of, conf, fixed, intg

RuleTemplate = PrimitiveSpec

ENV = "env"
CONST = "const"
TRANSFORM = "transform"

_Builder = Callable[[Sequence[str], Sequence[str], Mapping[str, bool]], RuleExpr]


@dataclass(frozen=True)
class KindInfo:
    kind: str
    inputs: tuple[str, ...] | None  # None: declared by the model
    outputs: tuple[str, ...] | None
    build: _Builder
    doc: str


def _env(ins: Sequence[str], outs: Sequence[str], params: Mapping[str, bool]) -> RuleExpr:
    c = params.get("conf", False)
    i = params.get("intg", False)
    return all_of(*(e for p in (*ins, *outs) for e in (fixed(conf(p), c), fixed(intg(p), i))))


def _transform(ins: Sequence[str], outs: Sequence[str], params: Mapping[str, bool]) -> RuleExpr:
    parts: list[RuleExpr] = []
    any_conf = any_of(*(conf(p) for p in ins))
    all_intg = all_of(*(intg(p) for p in ins))
    for o in outs:
        if ins:
            parts.append(rules.Implies(any_conf, conf(o)))
            parts.append(rules.Implies(intg(o), all_intg))
    return all_of(*parts)


def _const(*_: object) -> RuleExpr:
    return rules.TRUE


def _fixed_rule(expr: RuleExpr) -> _Builder:
    return lambda ins, outs, params: expr


_REGISTRY: dict[str, KindInfo] = {}


def register(info: KindInfo) -> None:
    if info.kind in _REGISTRY:
        raise ValueError(f"kind {info.kind!r} already registered")
    _REGISTRY[info.kind] = info


def _fixed(kind: str, inputs: tuple[str, ...], outputs: tuple[str, ...], expr: RuleExpr, doc: str) -> None:
    register(KindInfo(kind, inputs, outputs, _fixed_rule(expr), doc))


register(KindInfo(ENV, None, None, _env,
                  "Model boundary. Every port's guarantees are fixed to the declared assumption."))
register(KindInfo(CONST, (), None, _const, "Fixed value; requires nothing by itself."))
register(KindInfo(TRANSFORM, None, None, _transform,
                  "Copy/encode/split. Any confidential input makes every output confidential; "
                  "an output that needs integrity needs it on every input."))

_fixed("rng", ("len",), ("data",), all_of(conf("data"), intg("len")),
       "Random bytes must stay secret; an attacker must not shorten the requested length.")

_fixed("enc_ctr", ("Plain", "Key", "Ctr"), ("Cipher",),
       all_of(rules.Implies(intg("Cipher"), intg("Plain")), intg("Key"), conf("Key"), intg("Ctr")),
       "Counter mode hides the plaintext but gives no integrity; key and counter are critical.")

# Mirror of enc_ctr. Plaintext confidentiality is left to the outgoing channel.
_fixed("dec_ctr", ("Cipher", "Key", "Ctr"), ("Plain",),
       all_of(rules.Implies(intg("Plain"), intg("Cipher")), intg("Key"), conf("Key"), intg("Ctr")),
       "Decrypted data is only as trustworthy as the ciphertext; key and counter are critical.")

_fixed("dhpub", ("g", "m", "x"), ("pub",),
       all_of(intg("g"), intg("m"), conf("x"), intg("x")),
       "Group parameters and the secret exponent must not be chosen by an attacker.")

_fixed("dhsec", ("pub", "g", "m", "x"), ("ssec",),
       all_of(intg("g"), intg("m"), conf("x"), intg("x"), conf("ssec"),
              rules.Implies(intg("ssec"), all_of(intg("pub"), intg("g"), intg("m"), intg("x")))),
       "The shared secret is confidential; it is only authentic if every input is.")

# Tag integrity is achieved cryptographically; the PRF keeps message secrecy out of the tag.
_fixed("hmac", ("Key", "Msg"), ("Tag",), all_of(intg("Key"), conf("Key")),
       "Only the key needs protection.")

_fixed("sign", ("Key", "Msg"), ("Sig",), all_of(intg("Key"), conf("Key"), intg("Msg")),
       "Signing key is secret; what gets signed must not be attacker-chosen.")

_fixed("verify", ("Pubkey", "Msg", "Sig"), ("Result",),
       all_of(intg("Pubkey"), rules.Implies(intg("Result"), intg("Pubkey"))),
       "A verdict is only meaningful with an authentic public key.")


def kinds() -> list[str]:
    return sorted(_REGISTRY)


def is_registered(kind: str) -> bool:
    return kind in _REGISTRY


def kind_info(kind: str) -> KindInfo:
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise ModelError(f"unknown primitive kind {kind!r}") from None


def template_for(
    kind: str,
    inputs: Sequence[str] = (),
    outputs: Sequence[str] = (),
    *,
    conf: bool = False,
    intg: bool = False,
) -> RuleTemplate:
    """Rule template of ``kind``.

    ``inputs``/``outputs`` are only consulted for variable-port kinds;
    ``conf``/``intg`` are the environment assumption for ``env``.
    """
    info = kind_info(kind)
    ins = info.inputs if info.inputs is not None else tuple(inputs)
    outs = info.outputs if info.outputs is not None else tuple(outputs)
    expr = info.build(ins, outs, {"conf": conf, "intg": intg})
    return PrimitiveSpec(kind, ins, outs, expr)


def instantiate_rule(tmpl: RuleTemplate, instance_name: str) -> RuleExpr:
    return rules.bind(tmpl.rule, instance_name)


def fixed_ports(kind: str) -> tuple[tuple[str, ...] | None, tuple[str, ...] | None]:
    if not is_registered(kind):
        return None, None
    info = _REGISTRY[kind]
    return info.inputs, info.outputs


def make_instance(
    kind: str,
    name: str,
    inputs: Sequence[str] = (),
    outputs: Sequence[str] = (),
    *,
    conf: bool = False,
    intg: bool = False,
    rule: RuleExpr | None = None,
    attrs: Mapping[str, str] | None = None,
    config: Mapping[str, str] | None = None,
    description: str = "",
    taken: Sequence[str] = (),
) -> Instance:
    """Build and bind an instance; ``rule`` overrides (or defines) the kind's rule."""
    if rule is None:
        spec = template_for(kind, inputs, outputs, conf=conf, intg=intg)
    else:
        fin, fout = fixed_ports(kind)
        spec = PrimitiveSpec(
            kind,
            tuple(fin if fin is not None else inputs),
            tuple(fout if fout is not None else outputs),
            rule,
            inline=True,
        )
    if kind == ENV and rule is None:
        attrs = {**(attrs or {}), "confidentiality": _b(conf), "integrity": _b(intg)}
    return bind_instance(spec, name, taken, attrs=attrs, config=config, description=description)


def _b(value: bool) -> str:
    return "true" if value else "false"


def env_assumption(inst: Instance) -> tuple[bool, bool] | None:
    """Declared (conf, intg) of an env instance without an inline rule."""
    if inst.kind != ENV or inst.spec.inline:
        return None
    return (inst.attrs.get("confidentiality") == "true", inst.attrs.get("integrity") == "true")


# SLOC per kind used for TCB estimates. Calibration constants, not measurements.
DEFAULT_WEIGHTS: dict[str, int] = {
    "const": 5,
    "transform": 15,
    "rng": 30,
    "enc_ctr": 60,
    "dec_ctr": 60,
    "dhpub": 80,
    "dhsec": 80,
    "hmac": 60,
    "sign": 60,
    "verify": 60,
    "env": 20,
}
# model-defined kinds
FALLBACK_WEIGHT = 20
