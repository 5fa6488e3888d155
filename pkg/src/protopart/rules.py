"""Boolean guarantee expressions: AST, evaluation, substitution and text form.

Text grammar (used for inline ``<rule>`` elements and conflict reports)::

    expr    := iff
    iff     := implies ('<->' implies)*
    implies := or ('->' implies)?          # right associative
    or      := and ('|' and)*
    and     := unary ('&' unary)*
    unary   := '!' unary | atom | 'true' | 'false' | '(' expr ')'
    atom    := ('conf' | 'intg') '(' port ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Iterator, Mapping, Union

if TYPE_CHECKING:
    from .model import Channel

CONF = "conf"
INTG = "intg"
KINDS = (CONF, INTG)


class RuleSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Atom:
    """A single guarantee variable: confidentiality or integrity of a port.

    ``port`` is either primitive-local (``"Key"``) or global (``"enc.Key"``).
    """

    port: str
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown guarantee kind {self.kind!r}")
        if not self.port:
            raise ValueError("empty port name")

    @property
    def instance(self) -> str:
        return self.port.split(".", 1)[0]

    @property
    def local(self) -> str:
        return self.port.split(".", 1)[-1]

    def sort_key(self) -> tuple[str, str, int]:
        inst, _, local = self.port.partition(".")
        return (inst, local, KINDS.index(self.kind))

    def __str__(self) -> str:
        return f"{self.kind}({self.port})"


@dataclass(frozen=True)
class Not:
    arg: "RuleExpr"


@dataclass(frozen=True)
class And:
    args: tuple["RuleExpr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["RuleExpr", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "RuleExpr"
    rhs: "RuleExpr"


@dataclass(frozen=True)
class Iff:
    lhs: "RuleExpr"
    rhs: "RuleExpr"


RuleExpr = Union[Const, Atom, Not, And, Or, Implies, Iff]

TRUE = Const(True)
FALSE = Const(False)


def conf(port: str) -> Atom:
    return Atom(port, CONF)


def intg(port: str) -> Atom:
    return Atom(port, INTG)


def all_of(*args: RuleExpr) -> RuleExpr:
    """n-ary conjunction, flattened. Empty conjunction is ``true``."""
    flat: list[RuleExpr] = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a != TRUE:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def any_of(*args: RuleExpr) -> RuleExpr:
    flat: list[RuleExpr] = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a != FALSE:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def fixed(atom: Atom, value: bool) -> RuleExpr:
    """``atom ≡ value`` written as a literal."""
    return atom if value else Not(atom)


# -- traversal --------------------------------------------------------------


def _children(expr: RuleExpr) -> tuple[RuleExpr, ...]:
    if isinstance(expr, Not):
        return (expr.arg,)
    if isinstance(expr, (And, Or)):
        return expr.args
    if isinstance(expr, (Implies, Iff)):
        return (expr.lhs, expr.rhs)
    return ()


def iter_atoms(expr: RuleExpr) -> Iterator[Atom]:
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Atom):
            yield e
        else:
            stack.extend(_children(e))


def free_atoms(expr: RuleExpr) -> tuple[Atom, ...]:
    """Atoms occurring in ``expr``, duplicate-free, in canonical atom order."""
    return tuple(sorted(set(iter_atoms(expr)), key=Atom.sort_key))


def map_atoms(expr: RuleExpr, fn: Callable[[Atom], RuleExpr]) -> RuleExpr:
    if isinstance(expr, Atom):
        return fn(expr)
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Not):
        return Not(map_atoms(expr.arg, fn))
    if isinstance(expr, And):
        return And(tuple(map_atoms(a, fn) for a in expr.args))
    if isinstance(expr, Or):
        return Or(tuple(map_atoms(a, fn) for a in expr.args))
    if isinstance(expr, Implies):
        return Implies(map_atoms(expr.lhs, fn), map_atoms(expr.rhs, fn))
    if isinstance(expr, Iff):
        return Iff(map_atoms(expr.lhs, fn), map_atoms(expr.rhs, fn))
    raise TypeError(f"not a rule expression: {expr!r}")


def substitute(expr: RuleExpr, ports: Mapping[str, str]) -> RuleExpr:
    """Rename ports; atoms whose port is not in ``ports`` raise KeyError."""
    return map_atoms(expr, lambda a: Atom(ports[a.port], a.kind))


def bind(expr: RuleExpr, instance: str) -> RuleExpr:
    """Replace every local port ``p`` by the global name ``<instance>.<p>``."""
    return map_atoms(expr, lambda a: Atom(f"{instance}.{a.port}", a.kind))


# -- evaluation -------------------------------------------------------------


def eval_rule(expr: RuleExpr, asg: Mapping[Atom, bool]) -> bool:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Atom):
        try:
            return asg[expr]
        except KeyError:
            raise KeyError(f"assignment has no value for {expr}") from None
    if isinstance(expr, Not):
        return not eval_rule(expr.arg, asg)
    if isinstance(expr, And):
        return all(eval_rule(a, asg) for a in expr.args)
    if isinstance(expr, Or):
        return any(eval_rule(a, asg) for a in expr.args)
    if isinstance(expr, Implies):
        return (not eval_rule(expr.lhs, asg)) or eval_rule(expr.rhs, asg)
    if isinstance(expr, Iff):
        return eval_rule(expr.lhs, asg) == eval_rule(expr.rhs, asg)
    raise TypeError(f"not a rule expression: {expr!r}")


def eval_partial(expr: RuleExpr, asg: Mapping[Atom, bool]) -> bool | None:
    """Kleene three-valued evaluation; ``None`` when undetermined."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Atom):
        return asg.get(expr)
    if isinstance(expr, Not):
        v = eval_partial(expr.arg, asg)
        return None if v is None else not v
    if isinstance(expr, And):
        result: bool | None = True
        for a in expr.args:
            v = eval_partial(a, asg)
            if v is False:
                return False
            if v is None:
                result = None
        return result
    if isinstance(expr, Or):
        result = False
        for a in expr.args:
            v = eval_partial(a, asg)
            if v is True:
                return True
            if v is None:
                result = None
        return result
    if isinstance(expr, Implies):
        lhs = eval_partial(expr.lhs, asg)
        if lhs is False:
            return True
        rhs = eval_partial(expr.rhs, asg)
        if rhs is True:
            return True
        if lhs is True and rhs is False:
            return False
        return None
    if isinstance(expr, Iff):
        lhs = eval_partial(expr.lhs, asg)
        rhs = eval_partial(expr.rhs, asg)
        if lhs is None or rhs is None:
            return None
        return lhs == rhs
    raise TypeError(f"not a rule expression: {expr!r}")


# -- channel rule -----------------------------------------------------------


def channel_rule(ch: "Channel") -> RuleExpr:
    """Both kinds of guarantee are equal on the two ends of a channel."""
    out = f"{ch.src}.{ch.out_port}"
    inp = f"{ch.dst}.{ch.in_port}"
    return And((Iff(intg(out), intg(inp)), Iff(conf(out), conf(inp))))


# -- pretty printer ---------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}


def format_rule(expr: RuleExpr) -> str:
    return _fmt(expr, 0)


def _fmt(expr: RuleExpr, parent: int) -> str:
    if isinstance(expr, Const):
        return "true" if expr.value else "false"
    if isinstance(expr, Atom):
        return str(expr)
    prec = _PREC[type(expr)]
    if isinstance(expr, Not):
        return "!" + _fmt(expr.arg, prec)
    if isinstance(expr, And):
        text = " & ".join(_fmt(a, prec) for a in expr.args)
    elif isinstance(expr, Or):
        text = " | ".join(_fmt(a, prec) for a in expr.args)
    elif isinstance(expr, Implies):
        # right associative: a -> (b -> c) prints without parentheses
        text = f"{_fmt(expr.lhs, prec + 1)} -> {_fmt(expr.rhs, prec)}"
    else:
        text = f"{_fmt(expr.lhs, prec + 1)} <-> {_fmt(expr.rhs, prec + 1)}"
    return f"({text})" if prec <= parent else text


# -- parser -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(<->|->|[!&|()]|[A-Za-z_][A-Za-z0-9_]*)")


def parse_rule(text: str) -> RuleExpr:
    parser = _Parser(text)
    expr = parser.expr()
    parser.skip_ws()
    if parser.pos != len(text):
        raise RuleSyntaxError(f"trailing input at offset {parser.pos}: {text[parser.pos:]!r}")
    return expr


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str | None:
        m = _TOKEN.match(self.text, self.pos)
        return m.group(1) if m else None

    def take(self, expected: str | None = None) -> str:
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            raise RuleSyntaxError(f"unexpected input at offset {self.pos}: {self.text[self.pos:]!r}")
        tok = m.group(1)
        if expected is not None and tok != expected:
            raise RuleSyntaxError(f"expected {expected!r} at offset {self.pos}, got {tok!r}")
        self.pos = m.end()
        return tok

    def expr(self) -> RuleExpr:
        lhs = self.implies()
        while self.peek() == "<->":
            self.take()
            lhs = Iff(lhs, self.implies())
        return lhs

    def implies(self) -> RuleExpr:
        lhs = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(lhs, self.implies())
        return lhs

    def disj(self) -> RuleExpr:
        args = [self.conj()]
        while self.peek() == "|":
            self.take()
            args.append(self.conj())
        return args[0] if len(args) == 1 else any_of(*args)

    def conj(self) -> RuleExpr:
        args = [self.unary()]
        while self.peek() == "&":
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else all_of(*args)

    def unary(self) -> RuleExpr:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok in KINDS:
            self.take()
            self.take("(")
            end = self.text.find(")", self.pos)
            if end < 0:
                raise RuleSyntaxError("unterminated port reference")
            port = self.text[self.pos:end].strip()
            if not port:
                raise RuleSyntaxError(f"empty port in {tok}()")
            self.pos = end + 1
            return Atom(port, tok)
        raise RuleSyntaxError(f"unexpected token {tok!r} at offset {self.pos}")


def atoms_of_ports(ports: Iterable[str]) -> list[Atom]:
    return [Atom(p, k) for p in ports for k in KINDS]
