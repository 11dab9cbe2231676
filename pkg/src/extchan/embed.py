"""Pre-opened channels: the ``-pipe`` option and its PID handshake.

Child side: :func:`parse_pipe_option` and :func:`activate_preopened`.
Parent side: :func:`spawn_embedded`.

Wire format (ASCII decimal, LF terminated)::

    child  -> parent   <childpid>\\n
    parent -> child    <childpid>,<parentpid>\\n
"""
from __future__ import annotations

import logging
import os
import re
import subprocess
import time
from dataclasses import dataclass

from .channels import ChannelRegistry
from .errors import (
    HandshakeError,
    HandshakeRejected,
    HandshakeTimeout,
    PidMismatch,
    PipeOptionError,
    ReadTimeout,
    SpawnFailure,
)
from .stream import Duplex

log = logging.getLogger(__name__)

DEFAULT_HANDSHAKE_TIMEOUT = 30.0
MAX_REPLY_LENGTH = 128

_REPLY_RE = re.compile(rb"(-?[0-9]+),(-?[0-9]+)\n")
_PID_RE = re.compile(rb"([0-9]+)\n")


@dataclass(frozen=True)
class PreopenedSpec:
    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class HandshakeResult:
    channel_id: int
    child_pid: int
    parent_pid: int


def parse_pipe_option(arg: str) -> PreopenedSpec:
    """Parse ``r1,w1[,r2,w2...]`` into descriptor pairs, keeping their order."""
    tokens = arg.split(",")
    fds = []
    for tok in tokens:
        if not tok.isascii() or not tok.isdigit():
            raise PipeOptionError(f"-pipe: not a descriptor number: {tok!r}")
        fds.append(int(tok))
    if len(fds) % 2:
        raise PipeOptionError(f"-pipe: odd number of descriptors in {arg!r}")
    if len(set(fds)) != len(fds):
        raise PipeOptionError(f"-pipe: duplicate descriptor in {arg!r}")
    if any(fd < 3 for fd in fds):
        raise PipeOptionError("-pipe: descriptors 0, 1 and 2 are reserved")
    return PreopenedSpec(tuple(zip(fds[0::2], fds[1::2])))


def format_pipe_option(pairs) -> str:
    return ",".join(f"{r},{w}" for r, w in pairs)


def _handshake_child(stream: Duplex, timeout: float) -> int:
    pid = os.getpid()
    stream.write(b"%d\n" % pid)
    try:
        line = stream.readline(timeout, limit=MAX_REPLY_LENGTH)
    except ReadTimeout:
        raise HandshakeTimeout(f"no handshake reply within {timeout} s") from None
    m = _REPLY_RE.fullmatch(line)
    if not m:
        raise HandshakeRejected(f"malformed handshake reply {line!r}")
    if int(m.group(1)) != pid:
        raise HandshakeRejected(f"handshake reply names pid {int(m.group(1))}, ours is {pid}")
    return int(m.group(2))


def activate_preopened(
    registry: ChannelRegistry,
    spec: PreopenedSpec,
    timeout: float = DEFAULT_HANDSHAKE_TIMEOUT,
    variables: dict | None = None,
) -> list[HandshakeResult]:
    """Run the handshake on every pair, left to right, and register channels.

    Any failure aborts the whole activation; channels already registered by
    this call are removed again. When *variables* is given, ``PIPE1_`` ...
    ``PIPEn_`` and ``PIPES_`` are stored into it.
    """
    results: list[HandshakeResult] = []
    try:
        for r, w in spec.pairs:
            stream = Duplex(r, w)
            try:
                parent_pid = _handshake_child(stream, timeout)
            except (HandshakeError, OSError):
                stream.close()
                raise
            n = registry.add_preopened(stream, parent_pid)
            results.append(HandshakeResult(n, os.getpid(), parent_pid))
    except (HandshakeError, OSError):
        for res in results:
            registry.remove_channel(res.channel_id)
        raise
    if variables is not None:
        for k, res in enumerate(results, 1):
            variables[f"PIPE{k}_"] = str(res.channel_id)
        variables["PIPES_"] = str(len(results))
    return results


class EmbeddedChild:
    """Parent-side handle on a child started with pre-opened channels.

    ``channels[k]`` is the duplex stream for the (k+1)-th ``-pipe`` pair.
    """

    def __init__(self, process: subprocess.Popen, channels: list[Duplex]):
        self.process = process
        self.channels = channels

    @property
    def pid(self) -> int:
        return self.process.pid

    def send(self, k: int, payload: bytes) -> None:
        self.channels[k].write(payload)

    def read(self, k: int, prompt: bytes = b"", maxlength=None, timeout=None) -> bytes:
        return self.channels[k].read_until_prompt(prompt, maxlength, timeout)

    def request(self, k: int, payload: bytes, prompt: bytes = b"", timeout=None) -> bytes:
        self.send(k, payload)
        return self.read(k, prompt, timeout=timeout)

    def close(self, timeout: float | None = 5.0) -> int | None:
        """Close all channels and wait for the child; kill it if it lingers."""
        for ch in self.channels:
            ch.close()
        try:
            return self.process.wait(timeout)
        except subprocess.TimeoutExpired:
            self.process.kill()
            return self.process.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def spawn_embedded(
    command: list[str], n_channels: int = 1, timeout: float = DEFAULT_HANDSHAKE_TIMEOUT
) -> EmbeddedChild:
    """Start *command* with *n_channels* pre-opened channels and handshake.

    ``-pipe r1,w1,...`` is appended to *command*.
    """
    if n_channels < 1:
        raise ValueError("n_channels must be positive")
    parent_ends: list[Duplex] = []
    child_fds: list[int] = []
    pairs = []
    try:
        for _ in range(n_channels):
            to_child_r, to_child_w = os.pipe()
            from_child_r, from_child_w = os.pipe()
            child_fds += [to_child_r, from_child_w]
            pairs.append((to_child_r, from_child_w))
            parent_ends.append(Duplex(from_child_r, to_child_w))
    except OSError as exc:
        for fd in child_fds:
            os.close(fd)
        for d in parent_ends:
            d.close()
        raise SpawnFailure(f"cannot create pipes: {exc}") from exc

    argv = list(command) + ["-pipe", format_pipe_option(pairs)]
    try:
        proc = subprocess.Popen(argv, pass_fds=child_fds)
    except OSError as exc:
        for d in parent_ends:
            d.close()
        raise SpawnFailure(f"cannot start {command[0]}: {exc}") from exc
    finally:
        for fd in child_fds:
            os.close(fd)

    child = EmbeddedChild(proc, parent_ends)
    deadline = time.monotonic() + timeout
    try:
        for stream in parent_ends:
            remaining = max(0.0, deadline - time.monotonic())
            try:
                line = stream.readline(remaining, limit=MAX_REPLY_LENGTH)
            except ReadTimeout:
                raise HandshakeTimeout(f"child did not announce its pid within {timeout} s") from None
            m = _PID_RE.fullmatch(line)
            if not m:
                raise HandshakeError(f"bad pid announcement {line!r}")
            if int(m.group(1)) != proc.pid:
                raise PidMismatch(f"child announced pid {int(m.group(1))}, spawned {proc.pid}")
            stream.write(b"%d,%d\n" % (proc.pid, os.getpid()))
    except BaseException:
        for d in parent_ends:
            d.close()
        proc.kill()
        proc.wait()
        raise
    log.debug("embedded child %d ready with %d channel(s)", proc.pid, n_channels)
    return child
