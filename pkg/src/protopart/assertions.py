"""Expert assertions on channels, checked against a solved assignment."""

from __future__ import annotations

from dataclasses import dataclass

from . import rules
from .model import Assignment, Channel, ModelError
from .modelio import Assertion, ModelDocument
from .rules import Atom


@dataclass(frozen=True, order=True)
class Violation:
    channel: Channel
    expected: tuple[tuple[str, bool], ...]
    actual: tuple[tuple[str, bool], ...]
    message: str = ""

    def __str__(self) -> str:
        exp = ", ".join(f"{k}={_tf(v)}" for k, v in self.expected)
        got = ", ".join(f"{k}={_tf(v)}" for k, v in self.actual)
        return f"ASSERT FAIL {self.channel}: expected {exp}, got {got}: {self.message}"


def _tf(v: bool) -> str:
    return "true" if v else "false"


def check_assertions(doc: ModelDocument, asg: Assignment) -> list[Violation]:
    """Compare each assertion with the solved guarantees of its channel.

    Both ends of a channel agree in any solution, so the source port is read.
    ``asg`` is never modified.
    """
    channels = set(doc.network.channels)
    out = []
    for a in doc.assertions:
        if a.channel not in channels:
            raise ModelError(f"assertion references unknown channel {a.channel}")
        v = _check(a, asg)
        if v is not None:
            out.append(v)
    return sorted(out)


def _check(a: Assertion, asg: Assignment) -> Violation | None:
    expected, actual = [], []
    for kind, want in ((rules.CONF, a.require_conf), (rules.INTG, a.require_intg)):
        if want is None:
            continue
        try:
            got = asg[Atom(a.channel.src_port, kind)]
        except KeyError:
            raise ModelError(f"assignment has no {kind} value for {a.channel.src_port}") from None
        expected.append((kind, want))
        actual.append((kind, got))
    if expected == actual:
        return None
    return Violation(a.channel, tuple(expected), tuple(actual), a.message)
