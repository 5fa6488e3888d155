"""Random model generators for property tests and scale checks."""

from __future__ import annotations

import random

from . import library
from .library import CONST, ENV, TRANSFORM
from .model import Channel, Instance, Network
from .modelio import ModelDocument

FIXED_KINDS = ("rng", "enc_ctr", "dec_ctr", "dhpub", "dhsec", "hmac", "sign", "verify")


class _Builder:
    def __init__(self) -> None:
        self.instances: list[Instance] = []
        self.channels: list[Channel] = []
        self.pool: list[tuple[str, str]] = []  # unconnected outputs
        self.counter = 0

    def add(self, kind: str, inputs: tuple[str, ...], outputs: tuple[str, ...], feeds: list[tuple[str, str]],
            conf: bool = False, intg: bool = False) -> str:
        self.counter += 1
        name = f"{kind}{self.counter}"
        self.instances.append(library.make_instance(kind, name, inputs, outputs, conf=conf, intg=intg))
        for (src, out), port in zip(feeds, inputs):
            self.channels.append(Channel(src, out, name, port))
        self.pool.extend((name, o) for o in outputs)
        return name

    def take(self, rng: random.Random, n: int) -> list[tuple[str, str]]:
        picked = rng.sample(range(len(self.pool)), n)
        out = [self.pool[i] for i in picked]
        for i in sorted(picked, reverse=True):
            del self.pool[i]
        return out

    def doc(self, name: str) -> ModelDocument:
        return ModelDocument(Network(name, self.instances, self.channels), [])


def random_network(rng: random.Random, max_instances: int = 12, max_ports: int = 12) -> ModelDocument:
    """A small acyclic network of registry kinds.

    Every input is connected; spare outputs may dangle. With at most
    ``max_ports`` ports the network has at most ``2 * max_ports`` atoms.
    Env instances get random assumptions, so some networks are unsatisfiable.
    """
    b = _Builder()
    budget = max_ports
    target = rng.randint(2, max_instances)
    while len(b.instances) < target and budget > 0:
        options = [CONST, ENV, TRANSFORM]
        for kind in FIXED_KINDS:
            fin, fout = library.fixed_ports(kind)
            assert fin is not None and fout is not None
            if len(fin) <= len(b.pool) and len(fin) + len(fout) <= budget:
                options.append(kind)
        kind = rng.choice(options)
        if kind == CONST:
            inputs, outputs = (), ("Const",)
        elif kind == ENV:
            n_in = rng.randint(0, min(2, len(b.pool), budget))
            n_out = rng.randint(0 if n_in else 1, min(2, budget - n_in)) if budget - n_in > 0 else 0
            if n_in + n_out == 0:
                break
            inputs = tuple(f"i{k}" for k in range(n_in))
            outputs = tuple(f"o{k}" for k in range(n_out))
        elif kind == TRANSFORM:
            if not b.pool or budget < 2:
                continue
            n_in = rng.randint(1, min(2, len(b.pool), budget - 1))
            n_out = rng.randint(1, min(2, budget - n_in))
            inputs = tuple(f"i{k}" for k in range(n_in))
            outputs = tuple(f"o{k}" for k in range(n_out))
        else:
            fin, fout = library.fixed_ports(kind)
            assert fin is not None and fout is not None
            inputs, outputs = fin, fout
        if len(inputs) + len(outputs) > budget:
            continue
        budget -= len(inputs) + len(outputs)
        b.add(kind, inputs, outputs, b.take(rng, len(inputs)), conf=rng.random() < 0.5, intg=rng.random() < 0.5)
    return b.doc(f"random{rng.randrange(1 << 30)}")


def _split(rng: random.Random, total: int, parts: int) -> list[int]:
    """``total`` as ``parts`` positive integers."""
    cuts = sorted(rng.sample(range(1, total), parts - 1))
    return [b - a for a, b in zip([0, *cuts], [*cuts, total])]


def large_network(
    rng: random.Random, instances: int = 186, channels: int = 285, *, fixed: int = 40, sinks: int = 10
) -> ModelDocument:
    """An acyclic network with exactly ``instances`` instances and ``channels`` channels.

    Constants are the sources and env instances the sinks; transforms take up
    whatever arity difference the fixed-port primitives leave. Every port is
    connected, and inputs only ever draw from earlier instances, so there are
    no self loops.
    """
    for _ in range(100):
        doc = _try_large(rng, instances, channels, fixed, sinks)
        if doc is not None:
            return doc
    raise RuntimeError("could not generate a network with the requested shape")


def _try_large(rng: random.Random, n: int, c: int, fixed: int, sinks: int) -> ModelDocument | None:
    kinds = [rng.choice(FIXED_KINDS) for _ in range(fixed)]
    fixed_in = sum(len(library.fixed_ports(k)[0] or ()) for k in kinds)
    sink_in = _split(rng, rng.randint(sinks, 2 * sinks), sinks)
    consts = (n - fixed - sinks) * 3 // 10
    transforms = n - fixed - sinks - consts
    t_in, t_out = c - fixed_in - sum(sink_in), c - consts - fixed
    if transforms < 1 or t_in < transforms or t_out < transforms:
        return None
    ins = _split(rng, t_in, transforms)
    outs = _split(rng, t_out, transforms)
    middle: list[tuple[str, int, int]] = [(k, len(library.fixed_ports(k)[0] or ()), 1) for k in kinds]
    middle += [(TRANSFORM, i, o) for i, o in zip(ins, outs)]
    rng.shuffle(middle)

    b = _Builder()
    for _ in range(consts):
        b.add(CONST, (), ("Const",), [])
    while middle:
        fits = [m for m in middle if m[1] <= len(b.pool)]
        if not fits:
            return None
        if len(b.pool) < 8:
            # keep the pool from running dry
            fits = [max(fits, key=lambda m: m[2] - m[1])]
        kind, n_in, n_out = rng.choice(fits)
        middle.remove((kind, n_in, n_out))
        if kind == TRANSFORM:
            inputs = tuple(f"i{k}" for k in range(n_in))
            outputs = tuple(f"o{k}" for k in range(n_out))
        else:
            fin, fout = library.fixed_ports(kind)
            assert fin is not None and fout is not None
            inputs, outputs = fin, fout
        b.add(kind, inputs, outputs, b.take(rng, n_in))
    if len(b.pool) != sum(sink_in):
        return None
    for k in sink_in:
        b.add(ENV, tuple(f"i{j}" for j in range(k)), (), b.take(rng, k), conf=True, intg=rng.random() < 0.5)
    return b.doc("large")
