"""Executable behaviour of the built-in primitive kinds.

These are validation stand-ins, not production cryptography. ``sign`` and
``verify`` in particular are keyed hashes: verification needs the signing key
as its "public key".
"""

from __future__ import annotations

import hashlib
import hmac as _hmac
from typing import Callable, Mapping

MASK64 = (1 << 64) - 1
FRAME_HEADER = 4


class ExecutionError(Exception):
    pass


# -- payload encoding -------------------------------------------------------


def int_to_bytes(n: int) -> bytes:
    if n < 0:
        raise ExecutionError(f"negative integer {n}")
    return n.to_bytes(max(1, (n.bit_length() + 7) // 8), "big")


def bytes_to_int(b: bytes) -> int:
    return int.from_bytes(b, "big")


def parse_value(text: str) -> bytes:
    """Literal payload: ``hex:..``, ``text:..``, or a decimal integer."""
    if text.startswith("hex:"):
        try:
            return bytes.fromhex(text[4:])
        except ValueError:
            raise ExecutionError(f"bad hex literal {text!r}") from None
    if text.startswith("text:"):
        return text[5:].encode()
    if text.strip().isdigit():
        return int_to_bytes(int(text))
    return text.encode()


# -- randomness -------------------------------------------------------------


class SplitMix64:
    def __init__(self, state: int) -> None:
        self.state = state & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def read(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self.next().to_bytes(8, "big")
        return bytes(out[:n])


def rng_stream(seed: int, instance: str) -> SplitMix64:
    salt = int.from_bytes(hashlib.sha256(instance.encode()).digest()[:8], "big")
    return SplitMix64((seed + salt) & MASK64)


# -- evaluators -------------------------------------------------------------

Inputs = Mapping[str, bytes]
Outputs = dict[str, bytes]


class Context:
    """Per-instance execution state handed to evaluators."""

    def __init__(self, name: str, inputs: tuple[str, ...], outputs: tuple[str, ...],
                 attrs: Mapping[str, str], config: Mapping[str, str], seed: int) -> None:
        self.name = name
        self.inputs = inputs
        self.outputs = outputs
        self.attrs = attrs
        self.config = config
        self.seed = seed
        self._rng: SplitMix64 | None = None

    @property
    def rng(self) -> SplitMix64:
        if self._rng is None:
            self._rng = rng_stream(self.seed, self.name)
        return self._rng


Evaluator = Callable[[Context, Inputs], Outputs]


def _single(ctx: Context, value: bytes) -> Outputs:
    if len(ctx.outputs) != 1:
        raise ExecutionError(f"{ctx.name}: expected exactly one output port, have {len(ctx.outputs)}")
    return {ctx.outputs[0]: value}


def const_eval(ctx: Context, inputs: Inputs) -> Outputs:
    if "value" not in ctx.attrs:
        raise ExecutionError(f"{ctx.name}: const without value")
    return _single(ctx, parse_value(ctx.attrs["value"]))


def rng_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"data": ctx.rng.read(bytes_to_int(inputs["len"]))}


def _modexp(base: bytes, exp: bytes, mod: bytes) -> bytes:
    m = bytes_to_int(mod)
    if m < 2:
        raise ExecutionError(f"modulus must be at least 2, got {m}")
    return int_to_bytes(pow(bytes_to_int(base), bytes_to_int(exp), m))


def dhpub_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"pub": _modexp(inputs["g"], inputs["x"], inputs["m"])}


def dhsec_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"ssec": _modexp(inputs["pub"], inputs["x"], inputs["m"])}


def keystream(key: bytes, ctr: int, length: int) -> bytes:
    out = bytearray()
    block = 0
    while len(out) < length:
        out += hashlib.sha256(key + ((ctr + block) & MASK64).to_bytes(8, "big")).digest()
        block += 1
    return bytes(out[:length])


def ctr_xor(data: bytes, key: bytes, ctr: bytes) -> bytes:
    if len(ctr) > 8:
        raise ExecutionError(f"counter longer than 64 bits ({len(ctr)} bytes)")
    ks = keystream(key, bytes_to_int(ctr), len(data))
    return bytes(a ^ b for a, b in zip(data, ks))


def enc_ctr_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"Cipher": ctr_xor(inputs["Plain"], inputs["Key"], inputs["Ctr"])}


def dec_ctr_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"Plain": ctr_xor(inputs["Cipher"], inputs["Key"], inputs["Ctr"])}


def hmac_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"Tag": _hmac.new(inputs["Key"], inputs["Msg"], hashlib.sha256).digest()}


_SIG_TAG = b"protopart-sig:"


def sign_eval(ctx: Context, inputs: Inputs) -> Outputs:
    return {"Sig": _hmac.new(inputs["Key"], _SIG_TAG + inputs["Msg"], hashlib.sha256).digest()}


def verify_eval(ctx: Context, inputs: Inputs) -> Outputs:
    expect = _hmac.new(inputs["Pubkey"], _SIG_TAG + inputs["Msg"], hashlib.sha256).digest()
    return {"Result": b"\x01" if _hmac.compare_digest(expect, inputs["Sig"]) else b"\x00"}


# -- transform --------------------------------------------------------------


def encode(parts: list[bytes]) -> bytes:
    return b"".join(len(p).to_bytes(FRAME_HEADER, "big") + p for p in parts)


def decode(blob: bytes, count: int) -> list[bytes]:
    parts, pos = [], 0
    for _ in range(count):
        if pos + FRAME_HEADER > len(blob):
            raise ExecutionError("truncated encoded payload")
        n = int.from_bytes(blob[pos:pos + FRAME_HEADER], "big")
        pos += FRAME_HEADER
        if pos + n > len(blob):
            raise ExecutionError("truncated encoded payload")
        parts.append(blob[pos:pos + n])
        pos += n
    if pos != len(blob):
        raise ExecutionError(f"{len(blob) - pos} trailing bytes in encoded payload")
    return parts


def split(blob: bytes, lengths: list[int], count: int) -> list[bytes]:
    if len(lengths) not in (count - 1, count):
        raise ExecutionError(f"split needs {count - 1} or {count} lengths, got {len(lengths)}")
    if sum(lengths) > len(blob):
        raise ExecutionError(f"split lengths {lengths} exceed payload of {len(blob)} bytes")
    parts, pos = [], 0
    for n in lengths:
        parts.append(blob[pos:pos + n])
        pos += n
    if len(parts) < count:
        parts.append(blob[pos:])
    return parts


def transform_eval(ctx: Context, inputs: Inputs) -> Outputs:
    """``op`` from the instance config; defaults to branch for one input and
    concat for several."""
    ins = [inputs[p] for p in ctx.inputs]
    outs = ctx.outputs
    op = ctx.config.get("op") or ("branch" if len(ins) == 1 else "concat")
    if op == "branch":
        if len(ins) != 1:
            raise ExecutionError(f"{ctx.name}: branch takes one input")
        return {o: ins[0] for o in outs}
    if op == "concat":
        return {o: b"".join(ins) for o in outs}
    if op == "encode":
        return {o: encode(ins) for o in outs}
    if len(ins) != 1:
        raise ExecutionError(f"{ctx.name}: {op} takes one input")
    if op == "decode":
        return dict(zip(outs, decode(ins[0], len(outs))))
    if op == "split":
        raw = ctx.config.get("lengths", "")
        try:
            lengths = [int(x) for x in raw.split(",") if x.strip()]
        except ValueError:
            raise ExecutionError(f"{ctx.name}: bad split lengths {raw!r}") from None
        return dict(zip(outs, split(ins[0], lengths, len(outs))))
    raise ExecutionError(f"{ctx.name}: unknown transform op {op!r}")


EVALUATORS: dict[str, Evaluator] = {
    "const": const_eval,
    "rng": rng_eval,
    "transform": transform_eval,
    "dhpub": dhpub_eval,
    "dhsec": dhsec_eval,
    "enc_ctr": enc_ctr_eval,
    "dec_ctr": dec_ctr_eval,
    "hmac": hmac_eval,
    "sign": sign_eval,
    "verify": verify_eval,
}
