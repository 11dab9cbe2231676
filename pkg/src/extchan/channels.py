"""External commands as numbered, prompt-framed full-duplex channels."""
from __future__ import annotations

import atexit
import enum
import errno
import fcntl
import logging
import os
import shlex
import signal
import weakref
from dataclasses import dataclass

from .attrs import PREOPENED_ATTRS, ChannelAttributes
from .errors import (
    BrokenChannel,
    NoCurrentChannel,
    SpawnFailure,
    UnknownDescriptor,
)
from .stream import Duplex

log = logging.getLogger(__name__)

DEFAULT_SEARCH_PATH = ":/bin:/usr/bin"


class ChannelState(enum.Enum):
    RUNNING = "running"
    TERMINATED = "terminated"


@dataclass
class ExternalChannel:
    id: int
    command: str
    child_pid: int | None
    group_id: int | None
    stream: Duplex
    prompt: bytes
    attrs: ChannelAttributes
    state: ChannelState = ChannelState.RUNNING
    preopened: bool = False
    parent_pid: int | None = None

    @property
    def to_child(self) -> int:
        return self.stream.write_fd

    @property
    def from_child(self) -> int:
        return self.stream.read_fd

    @property
    def running(self) -> bool:
        return self.state is ChannelState.RUNNING


def resolve_executable(name: str, path: str | None = None) -> str | None:
    """Locate *name* the way a shell would.

    Names containing a slash are returned unchanged. Otherwise each component
    of *path* (default: ``$PATH``, or ``:/bin:/usr/bin`` if unset) is tried in
    order; an empty component means the current directory.
    """
    if "/" in name:
        return name
    if path is None:
        path = os.environ.get("PATH")
        if path is None:
            path = DEFAULT_SEARCH_PATH
    for directory in path.split(":"):
        candidate = os.path.join(directory, name) if directory else os.path.join(".", name)
        if os.path.isfile(candidate) and os.access(candidate, os.X_OK):
            return candidate
    return None


def _read_all(fd: int) -> bytes:
    chunks = []
    while True:
        try:
            chunk = os.read(fd, 4096)
        except InterruptedError:
            continue
        if not chunk:
            return b"".join(chunks)
        chunks.append(chunk)


def _child_exec(exe, argv, stdio, report_fd, pid_fd, daemon, own_group):
    """Runs in the forked child; never returns."""
    try:
        if daemon:
            grandchild = os.fork()
            if grandchild:
                os.write(pid_fd, str(grandchild).encode("ascii"))
                os._exit(0)
            os.setsid()
        elif own_group:
            os.setpgid(0, 0)
        # Move sources out of the 0..2 range before dup2 so none is clobbered.
        high = [fcntl.fcntl(fd, fcntl.F_DUPFD, 3) for fd in stdio]
        for target, fd in enumerate(high):
            os.dup2(fd, target)
        for fd in set(high) | set(stdio):
            if fd > 2:
                os.close(fd)
        for sig in (signal.SIGPIPE, signal.SIGXFSZ):
            signal.signal(sig, signal.SIG_DFL)
        os.execv(exe, argv)
    except BaseException as exc:  # noqa: BLE001 - must reach _exit
        code = getattr(exc, "errno", None) or errno.EINVAL
        try:
            os.write(report_fd, f"{code}:{exc}".encode("utf-8", "replace"))
        except BaseException:
            pass
    os._exit(127)


def spawn(command: str, attrs: ChannelAttributes) -> tuple[int, int, Duplex]:
    """Start *command* according to *attrs*.

    Returns ``(child_pid, group_id, stream)`` where *stream* writes to the
    child's stdin and reads its stdout.
    """
    if attrs.shell is None:
        argv = shlex.split(command)
        if not argv:
            raise SpawnFailure("empty command")
    else:
        argv = [w for w in attrs.shell.split(" ") if w] + [command]
    exe = resolve_executable(argv[0])
    if exe is None:
        raise SpawnFailure(f"{argv[0]}: executable not found")

    try:
        err_fd = os.open(attrs.stderr_target, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o666)
    except OSError as exc:
        raise SpawnFailure(f"cannot open stderr target {attrs.stderr_target}: {exc}") from exc

    opened: list[int] = [err_fd]
    try:
        in_r, in_w = os.pipe()
        opened += [in_r, in_w]
        out_r, out_w = os.pipe()
        opened += [out_r, out_w]
        report_r, report_w = os.pipe()
        opened += [report_r, report_w]
        pid_r, pid_w = os.pipe() if attrs.daemon else (-1, -1)
        if attrs.daemon:
            opened += [pid_r, pid_w]
    except OSError as exc:
        for fd in opened:
            os.close(fd)
        raise SpawnFailure(f"cannot create pipes: {exc}") from exc

    own_group = attrs.shell is None
    try:
        pid = os.fork()
    except OSError as exc:
        for fd in opened:
            os.close(fd)
        raise SpawnFailure(f"fork failed: {exc}") from exc

    if pid == 0:
        for fd in (in_w, out_r, report_r, pid_r):
            if fd >= 0:
                os.close(fd)
        _child_exec(exe, argv, (in_r, out_w, err_fd), report_w, pid_w, attrs.daemon, own_group)

    for fd in (in_r, out_w, err_fd, report_w, pid_w):
        if fd >= 0:
            os.close(fd)

    child_pid = pid
    if attrs.daemon:
        os.waitpid(pid, 0)
        reported = _read_all(pid_r)
        os.close(pid_r)
        if not reported:
            os.close(report_r)
            os.close(in_w)
            os.close(out_r)
            raise SpawnFailure("daemonizing fork failed")
        child_pid = int(reported)
    elif own_group:
        try:
            os.setpgid(pid, pid)
        except OSError:
            pass  # child already did it, or already exec'ed

    failure = _read_all(report_r)
    os.close(report_r)
    if failure:
        os.close(in_w)
        os.close(out_r)
        if not attrs.daemon:
            os.waitpid(pid, 0)
        _, _, msg = failure.decode("utf-8", "replace").partition(":")
        raise SpawnFailure(f"cannot execute {exe}: {msg}")

    if attrs.daemon or own_group:
        group_id = child_pid
    else:
        group_id = os.getpgrp()
    return child_pid, group_id, Duplex(out_r, in_w)


def _as_bytes(data) -> bytes:
    if isinstance(data, str):
        return data.encode("utf-8", "surrogateescape")
    return bytes(data)


def _shutdown_ref(ref):
    registry = ref()
    if registry is not None:
        registry.shutdown_all()


class ChannelRegistry:
    """Table of external channels with a "current" cursor.

    The command started last becomes current. Not safe for concurrent use.
    """

    def __init__(
        self,
        default_attrs: ChannelAttributes | None = None,
        default_prompt=b"",
        read_timeout: float | None = None,
        shutdown_at_exit: bool = True,
    ):
        self.channels: dict[int, ExternalChannel] = {}
        self.current: int | None = None
        self.default_attrs = default_attrs or ChannelAttributes()
        self.default_prompt = _as_bytes(default_prompt)
        self.read_timeout = read_timeout
        self.next_id = 1
        if shutdown_at_exit:
            atexit.register(_shutdown_ref, weakref.ref(self))

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.shutdown_all()

    def _register(self, **kwargs) -> int:
        n = self.next_id
        self.next_id += 1
        self.channels[n] = ExternalChannel(id=n, **kwargs)
        self.current = n
        return n

    def open_channel(self, command: str) -> int:
        if not command or not command.strip():
            raise SpawnFailure("empty command")
        attrs = self.default_attrs
        child_pid, group_id, stream = spawn(command, attrs)
        n = self._register(
            command=command,
            child_pid=child_pid,
            group_id=group_id,
            stream=stream,
            prompt=self.default_prompt,
            attrs=attrs,
        )
        log.debug("opened channel %d: %r (pid %d, group %d)", n, command, child_pid, group_id)
        return n

    def add_preopened(self, stream: Duplex, parent_pid: int | None = None) -> int:
        """Register an inherited descriptor pair as a channel."""
        return self._register(
            command="",
            child_pid=None,
            group_id=None,
            stream=stream,
            prompt=self.default_prompt,
            attrs=PREOPENED_ATTRS,
            preopened=True,
            parent_pid=parent_pid,
        )

    def get(self, n: int) -> ExternalChannel:
        ch = self.channels.get(n)
        if ch is None or not ch.running:
            raise UnknownDescriptor(n)
        return ch

    @property
    def current_channel(self) -> ExternalChannel:
        if self.current is None:
            raise NoCurrentChannel()
        return self.get(self.current)

    def send(self, payload) -> None:
        ch = self.current_channel
        try:
            ch.stream.write(_as_bytes(payload))
        except BrokenPipeError as exc:
            self._terminate(ch)
            raise BrokenChannel(f"channel {ch.id}: external command closed its input") from exc

    def read_until_prompt(self, maxlength: int | None = None) -> bytes:
        ch = self.current_channel
        return ch.stream.read_until_prompt(ch.prompt, maxlength, self.read_timeout)

    def set_prompt(self, newprompt) -> None:
        prompt = _as_bytes(newprompt)
        self.default_prompt = prompt
        if self.current is not None:
            self.channels[self.current].prompt = prompt

    def set_current(self, n: int) -> None:
        self.current = self.get(n).id

    def set_default_attrs(self, spec: str) -> None:
        self.default_attrs = self.default_attrs.merged(spec)

    def remove_channel(self, n: int | None = None) -> None:
        if n is None:
            self._terminate(self.current_channel)
        elif n == 0:
            for ch in list(self.channels.values()):
                if ch.running:
                    self._terminate(ch)
        else:
            self._terminate(self.get(n))

    def shutdown_all(self) -> None:
        for ch in list(self.channels.values()):
            if not ch.running:
                continue
            try:
                self._terminate(ch)
            except Exception:  # noqa: BLE001 - best effort at exit
                log.exception("failed to terminate channel %d", ch.id)

    def running_ids(self) -> list[int]:
        return [n for n, ch in self.channels.items() if ch.running]

    def _terminate(self, ch: ExternalChannel) -> None:
        ch.stream.close()
        attrs = ch.attrs
        if attrs.kill_signal and not ch.preopened:
            try:
                if attrs.killall:
                    os.killpg(ch.group_id, attrs.kill_signal)
                else:
                    os.kill(ch.child_pid, attrs.kill_signal)
            except ProcessLookupError:
                pass
        # A daemonized child was reparented; only a direct child can be awaited.
        if not attrs.daemon and not ch.preopened and ch.child_pid:
            try:
                os.waitpid(ch.child_pid, 0)
            except ChildProcessError:
                pass
        ch.state = ChannelState.TERMINATED
        if self.current == ch.id:
            self.current = None
        log.debug("terminated channel %d", ch.id)
