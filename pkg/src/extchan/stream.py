"""Prompt-framed duplex byte stream over a pair of raw file descriptors."""
from __future__ import annotations

import os
import select
import time

from .errors import EndOfStreamBeforePrompt, ReadTimeout

_CHUNK = 65536


def _deadline(timeout):
    return None if timeout is None else time.monotonic() + timeout


def is_prompt_line(line: bytes, prompt: bytes) -> bool:
    """True if *line* (newline-terminated) consists of exactly *prompt*.

    One trailing ``\\n`` and then one trailing ``\\r`` are stripped first.
    """
    if not line.endswith(b"\n"):
        return False
    content = line[:-1]
    if content.endswith(b"\r"):
        content = content[:-1]
    return content == prompt


def split_framed(data: bytes, prompt: bytes) -> tuple[bytes, bytes] | None:
    """Split *data* at the first prompt line.

    Returns ``(reply, rest)`` or ``None`` when no prompt line is present.
    Useful for parsing captured output of a prompt-speaking child.
    """
    pos = 0
    while pos < len(data):
        nl = data.find(b"\n", pos)
        if nl < 0:
            return None
        if is_prompt_line(data[pos : nl + 1], prompt):
            reply = data[:pos]
            return reply[:-1] if reply.endswith(b"\n") else reply, data[nl + 1 :]
        pos = nl + 1
    return None


class Duplex:
    """Write side and buffered line-reading side of one dialog partner.

    The descriptors are owned by this object and closed by :meth:`close`.
    """

    def __init__(self, read_fd: int, write_fd: int):
        self.read_fd = read_fd
        self.write_fd = write_fd
        self._buf = bytearray()
        self._eof = False
        self.closed = False

    def write(self, data: bytes) -> int:
        """Write all of *data*; raises BrokenPipeError if the reader is gone."""
        view = memoryview(data)
        total = 0
        while total < len(view):
            total += os.write(self.write_fd, view[total:])
        return total

    def _fill(self, deadline) -> bool:
        """Read one chunk into the buffer; False at end of stream."""
        if self._eof:
            return False
        if deadline is not None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ReadTimeout()
            poller = select.poll()
            poller.register(self.read_fd, select.POLLIN | select.POLLHUP | select.POLLERR)
            if not poller.poll(remaining * 1000):
                raise ReadTimeout()
        chunk = os.read(self.read_fd, _CHUNK)
        if not chunk:
            self._eof = True
            return False
        self._buf += chunk
        return True

    def readline(self, timeout=None, limit=None, *, _deadline_at=None) -> bytes:
        """Return the next line including its newline.

        At end of stream the (possibly empty) unterminated remainder is
        returned. With *limit*, at most that many bytes are returned even if
        no newline was seen yet.
        """
        deadline = _deadline_at if _deadline_at is not None else _deadline(timeout)
        scanned = 0
        while True:
            nl = self._buf.find(b"\n", scanned)
            if nl >= 0 and (limit is None or nl < limit):
                line = bytes(self._buf[: nl + 1])
                del self._buf[: nl + 1]
                return line
            if limit is not None and len(self._buf) >= limit:
                line = bytes(self._buf[:limit])
                del self._buf[:limit]
                return line
            scanned = len(self._buf)
            try:
                more = self._fill(deadline)
            except ReadTimeout:
                raise ReadTimeout(bytes(self._buf)) from None
            if not more:
                line = bytes(self._buf)
                self._buf.clear()
                return line

    def read_until_prompt(self, prompt: bytes, maxlength=None, timeout=None) -> bytes:
        """Read lines up to and including the prompt line.

        Returns the text before the prompt line without its final newline,
        truncated to *maxlength* bytes when given. The prompt line is consumed.
        """
        deadline = _deadline(timeout)
        parts: list[bytes] = []
        while True:
            try:
                line = self.readline(_deadline_at=deadline) if deadline else self.readline()
            except ReadTimeout as exc:
                raise ReadTimeout(b"".join(parts) + exc.partial) from None
            if is_prompt_line(line, prompt):
                break
            if not line.endswith(b"\n"):
                raise EndOfStreamBeforePrompt(b"".join(parts) + line)
            parts.append(line)
        text = b"".join(parts)
        if text.endswith(b"\n"):
            text = text[:-1]
        if maxlength is not None:
            text = text[:maxlength]
        return text

    def close(self):
        if self.closed:
            return
        self.closed = True
        for fd in (self.write_fd, self.read_fd):
            try:
                os.close(fd)
            except OSError:
                pass
