"""Deterministic in-process dataflow execution of a model.

Each instance has one pending slot per input port and fires once all slots
are filled; firing consumes the inputs. Constants (and other instances
without inputs) fire once at start, environments inject messages according
to their binding. Ready instances run from a FIFO queue; instances that
become ready together are queued by name.

There is no isolation between instances. Execution only validates that a
model computes what it should.
"""

from __future__ import annotations

import hashlib
import logging
import queue
import socket
import sys
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Mapping

from .library import CONST, ENV
from .modelio import ModelDocument
from .model import Instance, Network
from .primitives import EVALUATORS, Context, Evaluator, ExecutionError, parse_value

log = logging.getLogger(__name__)

MAX_FRAME = 16 * 1024 * 1024
MODES = ("fixture", "console", "file", "tcp-server", "tcp-client", "loopback")
_MODE_ALIASES = {"server": "tcp-server", "client": "tcp-client"}


@dataclass(frozen=True)
class EnvBinding:
    mode: str
    params: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ExecutionError(f"unknown environment mode {self.mode!r}")


def tcp_binding(config: Mapping[str, str]) -> EnvBinding:
    mode = _MODE_ALIASES.get(config.get("mode", ""), config.get("mode", ""))
    if mode not in ("tcp-server", "tcp-client"):
        raise ExecutionError(f"not a TCP mode: {config.get('mode')!r}")
    port = config.get("port", "")
    if not port.isdigit() or int(port) > 65535:
        raise ExecutionError(f"bad TCP port {port!r}")
    return EnvBinding(mode, dict(config))


def binding_from_config(inst: Instance) -> EnvBinding:
    mode = inst.config.get("mode")
    if mode is None:
        mode = "console" if inst.attrs.get("code") == "print" else "fixture"
    mode = _MODE_ALIASES.get(mode, mode)
    if mode.startswith("tcp-"):
        return tcp_binding({**inst.config, "mode": mode})
    return EnvBinding(mode, dict(inst.config))


# -- framing ----------------------------------------------------------------


def write_frame(sock: socket.socket, payload: bytes) -> None:
    if len(payload) > MAX_FRAME:
        raise ExecutionError(f"frame of {len(payload)} bytes exceeds {MAX_FRAME}")
    sock.sendall(len(payload).to_bytes(4, "big") + payload)


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            if buf:
                raise ExecutionError("connection closed inside a frame")
            return None
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> bytes | None:
    """Next frame, or None on a clean end of stream."""
    header = _read_exact(sock, 4)
    if header is None:
        return None
    n = int.from_bytes(header, "big")
    if n > MAX_FRAME:
        raise ExecutionError(f"frame of {n} bytes exceeds {MAX_FRAME}")
    if n == 0:
        return b""
    body = _read_exact(sock, n)
    if body is None:
        raise ExecutionError("connection closed inside a frame")
    return body


# -- trace ------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    step: int
    instance: str
    port: str
    direction: str  # "in" or "out"
    digest: str

    def __str__(self) -> str:
        return f"{self.step} {self.instance}.{self.port} {self.direction} {self.digest}"


def digest8(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()[:8]


@dataclass
class RunResult:
    trace: list[TraceRecord]
    received: dict[str, dict[str, list[bytes]]]
    events: int
    exhausted: bool = False
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.exhausted and not self.failures

    def dump_trace(self) -> str:
        return "".join(f"{r}\n" for r in self.trace)


# -- environments -----------------------------------------------------------

_Inbound = "queue.Queue[tuple[str, bytes | None | Exception]]"


class _Env:
    """Runtime side of an environment binding."""

    live = False  # may still produce messages from outside

    def __init__(self, inst: Instance, binding: EnvBinding) -> None:
        self.inst = inst
        self.binding = binding
        self.params = binding.params

    def start(self, inbound: "queue.Queue") -> dict[str, bytes]:
        return {}

    def receive(self, port: str, payload: bytes) -> list[tuple[str, dict[str, bytes]]]:
        return []

    def finish(self, result: RunResult) -> None:
        pass

    def close(self) -> None:
        pass

    def sole_output(self) -> str:
        outs = self.inst.outputs
        if len(outs) != 1:
            raise ExecutionError(f"{self.inst.name}: {self.binding.mode} binding needs exactly one output port")
        return outs[0]


class _FixtureEnv(_Env):
    """Scripted: ``send_<port>`` values are injected at start,
    ``expect_<port>`` and ``same_as_<port>="<env>.<port>"`` are checked at the end."""

    def start(self, inbound: "queue.Queue") -> dict[str, bytes]:
        out = {}
        for p in self.inst.outputs:
            value = self.params.get(f"send_{p}")
            if value is not None:
                out[p] = parse_value(value)
        return out

    def finish(self, result: RunResult) -> None:
        name = self.inst.name
        got = result.received.get(name, {})
        for key, value in sorted(self.params.items()):
            if key.startswith("expect_"):
                port = key[len("expect_"):]
                want = [parse_value(value)]
                if got.get(port, []) != want:
                    result.failures.append(
                        f"{name}.{port}: expected {want[0].hex() or '(empty)'}, got "
                        f"{', '.join(p.hex() for p in got.get(port, [])) or 'nothing'}"
                    )
            elif key.startswith("same_as_"):
                port = key[len("same_as_"):]
                other, _, oport = value.partition(".")
                mine = got.get(port, [])
                theirs = result.received.get(other, {}).get(oport, [])
                if not mine or mine != theirs:
                    result.failures.append(f"{name}.{port} and {value} received different messages")


class _LoopbackEnv(_Env):
    """Forwards whatever arrives on its inputs out of the ``peer`` env's output."""

    def __init__(self, inst: Instance, binding: EnvBinding, peer: Instance | None) -> None:
        super().__init__(inst, binding)
        if peer is None:
            raise ExecutionError(f"{inst.name}: loopback peer {binding.params.get('peer')!r} not found")
        self.peer = peer

    def receive(self, port: str, payload: bytes) -> list[tuple[str, dict[str, bytes]]]:
        outs = self.peer.outputs
        target = self.params.get("peer_port") or (outs[0] if len(outs) == 1 else None)
        if target is None or target not in outs:
            raise ExecutionError(f"{self.inst.name}: cannot pick an output port on peer {self.peer.name!r}")
        return [(self.peer.name, {target: payload})]


class _ConsoleEnv(_Env):
    def __init__(self, inst: Instance, binding: EnvBinding, stdin: IO[str], stdout: IO[str]) -> None:
        super().__init__(inst, binding)
        self.stdin = stdin
        self.stdout = stdout
        self.live = bool(inst.outputs)

    def start(self, inbound: "queue.Queue") -> dict[str, bytes]:
        if self.live:
            self.sole_output()
            threading.Thread(target=self._read, args=(inbound,), daemon=True).start()
        return {}

    def _read(self, inbound: "queue.Queue") -> None:
        for line in self.stdin:
            inbound.put((self.inst.name, line.rstrip("\n").encode()))
        inbound.put((self.inst.name, None))

    def receive(self, port: str, payload: bytes) -> list[tuple[str, dict[str, bytes]]]:
        print(f"{self.inst.name}.{port}: {payload.hex()}", file=self.stdout, flush=True)
        return []


class _FileEnv(_Env):
    """``in`` is read once as a single message; received payloads are appended to ``out``."""

    def start(self, inbound: "queue.Queue") -> dict[str, bytes]:
        out_path = self.params.get("out")
        if out_path:
            open(out_path, "wb").close()
        in_path = self.params.get("in")
        if in_path:
            try:
                with open(in_path, "rb") as fh:
                    return {self.sole_output(): fh.read()}
            except OSError as exc:
                raise ExecutionError(f"{self.inst.name}: {exc}") from None
        return {}

    def receive(self, port: str, payload: bytes) -> list[tuple[str, dict[str, bytes]]]:
        out_path = self.params.get("out")
        if out_path:
            with open(out_path, "ab") as fh:
                fh.write(payload)
        return []


class _TcpEnv(_Env):
    def __init__(self, inst: Instance, binding: EnvBinding, flush_timeout: float) -> None:
        super().__init__(inst, binding)
        self.host = self.params.get("host", "127.0.0.1")
        self.port = int(self.params["port"])
        self.live = bool(inst.outputs)
        self.flush_timeout = flush_timeout
        self._conn: socket.socket | None = None
        self._listener: socket.socket | None = None
        self._connected = threading.Event()
        self._lock = threading.Lock()
        self._pending: list[bytes] = []

    def start(self, inbound: "queue.Queue") -> dict[str, bytes]:
        if self.live:
            self.sole_output()
        try:
            if self.binding.mode == "tcp-server":
                self._listener = socket.create_server((self.host, self.port))
                threading.Thread(target=self._accept, args=(inbound,), daemon=True).start()
            else:
                conn = socket.create_connection((self.host, self.port), timeout=self.flush_timeout)
                conn.settimeout(None)
                self._attach(conn, inbound)
        except OSError as exc:
            raise ExecutionError(f"{self.inst.name}: {self.binding.mode} {self.host}:{self.port}: {exc}") from None
        return {}

    def _accept(self, inbound: "queue.Queue") -> None:
        assert self._listener is not None
        try:
            conn, _ = self._listener.accept()
        except OSError:
            return
        self._attach(conn, inbound)

    def _attach(self, conn: socket.socket, inbound: "queue.Queue") -> None:
        with self._lock:
            self._conn = conn
            for payload in self._pending:
                write_frame(conn, payload)
            self._pending.clear()
            self._connected.set()
        if self.live:
            threading.Thread(target=self._read, args=(conn, inbound), daemon=True).start()

    def _read(self, conn: socket.socket, inbound: "queue.Queue") -> None:
        try:
            while True:
                frame = read_frame(conn)
                if frame is None:
                    break
                inbound.put((self.inst.name, frame))
        except (OSError, ExecutionError) as exc:
            inbound.put((self.inst.name, exc if isinstance(exc, ExecutionError) else ExecutionError(str(exc))))
            return
        inbound.put((self.inst.name, None))

    def receive(self, port: str, payload: bytes) -> list[tuple[str, dict[str, bytes]]]:
        with self._lock:
            if self._conn is None:
                self._pending.append(payload)
            else:
                write_frame(self._conn, payload)
        return []

    def close(self) -> None:
        if self._pending and not self._connected.wait(self.flush_timeout):
            log.warning("%s: no peer connected, %d message(s) dropped", self.inst.name, len(self._pending))
        for s in (self._conn, self._listener):
            if s is not None:
                try:
                    s.close()
                except OSError:
                    pass


# -- scheduler --------------------------------------------------------------


def run_network(
    doc: ModelDocument,
    bindings: Mapping[str, EnvBinding] | None = None,
    seed: int = 0,
    max_steps: int = 100_000,
    *,
    evaluators: Mapping[str, Evaluator] | None = None,
    idle_timeout: float = 5.0,
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
) -> RunResult:
    """Execute ``doc`` until quiescence or until ``max_steps`` events.

    An event is one firing or one message delivery. ``bindings`` override the
    bindings derived from each env's ``<config>``; ``evaluators`` add or
    replace primitive implementations by kind.
    """
    net = doc.network
    impls = {**EVALUATORS, **(evaluators or {})}
    envs = _make_envs(net, bindings or {}, stdin or sys.stdin, stdout or sys.stdout, idle_timeout)
    for inst in net.instances.values():
        if inst.kind != ENV and inst.kind not in impls:
            raise ExecutionError(f"{inst.name}: no implementation for kind {inst.kind!r}")

    result = RunResult(trace=[], received={n: {} for n in envs}, events=0)
    contexts = {
        n: Context(n, i.inputs, i.outputs, i.attrs, i.config, seed)
        for n, i in net.instances.items()
        if i.kind != ENV
    }
    slots: dict[str, dict[str, bytes]] = {n: {} for n in contexts}
    ready: deque[tuple[str, dict[str, bytes] | None]] = deque()
    inbound: queue.Queue = queue.Queue()
    live = set()

    def record(inst: str, port: str, direction: str, payload: bytes) -> None:
        result.trace.append(TraceRecord(len(result.trace) + 1, inst, port, direction, digest8(payload)))

    def spend() -> bool:
        if result.events >= max_steps:
            result.exhausted = True
            return False
        result.events += 1
        return True

    try:
        initial: list[tuple[str, dict[str, bytes] | None]] = []
        for name, env in envs.items():
            emitted = env.start(inbound)
            if env.live:
                live.add(name)
            if emitted:
                initial.append((name, emitted))
        for name, inst in net.instances.items():
            if inst.kind != ENV and not inst.inputs:
                initial.append((name, None))
        ready.extend(sorted(initial, key=lambda item: item[0]))

        while not result.exhausted:
            if not ready:
                if not live:
                    break
                try:
                    name, payload = inbound.get(timeout=idle_timeout)
                except queue.Empty:
                    log.info("idle for %.1fs with external sources open; stopping", idle_timeout)
                    break
                if isinstance(payload, Exception):
                    raise payload
                if payload is None:
                    live.discard(name)
                else:
                    ready.append((name, {envs[name].sole_output(): payload}))
                continue

            name, preset = ready.popleft()
            if not spend():
                break
            inst = net.instances[name]
            if preset is not None:
                outputs = preset
            else:
                ctx = contexts[name]
                inputs, slots[name] = slots[name], {}
                try:
                    outputs = impls[inst.kind](ctx, inputs)
                except ExecutionError as exc:
                    raise ExecutionError(f"{name}: {exc}") from None
                except (KeyError, ValueError) as exc:
                    raise ExecutionError(f"{name} ({inst.kind}): {exc}") from None
            newly: list[tuple[str, dict[str, bytes] | None]] = []
            for port in inst.outputs:
                if port not in outputs:
                    continue
                payload = outputs[port]
                record(name, port, "out", payload)
                ch = net.channel_from(name, port)
                if ch is None:
                    continue
                if not spend():
                    break
                record(ch.dst, ch.in_port, "in", payload)
                if ch.dst in envs:
                    result.received[ch.dst].setdefault(ch.in_port, []).append(payload)
                    newly.extend(envs[ch.dst].receive(ch.in_port, payload))
                    continue
                pending = slots[ch.dst]
                if ch.in_port in pending:
                    raise ExecutionError(f"{ch.dst}.{ch.in_port}: second message before the instance fired")
                pending[ch.in_port] = payload
                if len(pending) == len(net.instances[ch.dst].inputs):
                    newly.append((ch.dst, None))
            ready.extend(sorted(newly, key=lambda item: item[0]))
    finally:
        for env in envs.values():
            env.close()

    for env in envs.values():
        env.finish(result)
    return result


def _make_envs(
    net: Network,
    bindings: Mapping[str, EnvBinding],
    stdin: IO[str],
    stdout: IO[str],
    timeout: float,
) -> dict[str, _Env]:
    envs: dict[str, _Env] = {}
    for name, inst in net.instances.items():
        if inst.kind != ENV:
            continue
        b = bindings.get(name) or binding_from_config(inst)
        if b.mode == "fixture":
            envs[name] = _FixtureEnv(inst, b)
        elif b.mode == "loopback":
            envs[name] = _LoopbackEnv(inst, b, net.instances.get(b.params.get("peer", "")))
        elif b.mode == "console":
            envs[name] = _ConsoleEnv(inst, b, stdin, stdout)
        elif b.mode == "file":
            envs[name] = _FileEnv(inst, b)
        else:
            envs[name] = _TcpEnv(inst, b, timeout)
    return envs


__all__ = [
    "CONST",
    "EnvBinding",
    "ExecutionError",
    "RunResult",
    "TraceRecord",
    "binding_from_config",
    "read_frame",
    "run_network",
    "tcp_binding",
    "write_frame",
]
