"""Spawn-time policy for external commands and its ``attr=value`` grammar."""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass

from .errors import AttributeParseError

DEFAULT_SHELL = "/bin/sh -c"
MAX_SIGNAL = 64

_KILL_RE = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class ChannelAttributes:
    """Process attributes applied when an external command is started.

    ``shell`` is the command prefix used to run the command, or ``None`` for
    "noshell" (the command is exec'ed directly after a PATH search).
    """

    kill_signal: int = 9
    killall: bool = True
    daemon: bool = True
    shell: str | None = DEFAULT_SHELL
    stderr_target: str = "/dev/null"

    def __post_init__(self):
        if not 0 <= self.kill_signal <= MAX_SIGNAL:
            raise AttributeParseError(f"kill signal {self.kill_signal} not in 0..{MAX_SIGNAL}")

    @property
    def noshell(self) -> bool:
        return self.shell is None

    def format(self) -> str:
        return ",".join(
            [
                f"kill={self.kill_signal}",
                f"killall={_fmt_bool(self.killall)}",
                f"daemon={_fmt_bool(self.daemon)}",
                f"shell={'noshell' if self.shell is None else self.shell}",
                f"stderr={self.stderr_target}",
            ]
        )

    def merged(self, spec: str) -> ChannelAttributes:
        """Return a copy with the attributes named in *spec* replaced."""
        return dataclasses.replace(self, **parse_attribute_spec(spec))


# Attributes of channels inherited from a parent via ``-pipe``; fixed.
PREOPENED_ATTRS = ChannelAttributes(
    kill_signal=0, killall=False, daemon=False, shell=None, stderr_target="/dev/tty"
)


def _fmt_bool(v: bool) -> str:
    return "true" if v else "false"


def _parse_bool(name: str, value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise AttributeParseError(f"{name}: expected 'true' or 'false', got {value!r}")


def parse_attribute_spec(spec: str) -> dict:
    """Parse ``attr=value(,attr=value)*`` into ChannelAttributes field values.

    Only the attributes present in *spec* appear in the result.
    """
    fields: dict = {}
    spec = spec.strip()
    if not spec:
        raise AttributeParseError("empty attribute list")
    for item in spec.split(","):
        name, sep, value = item.partition("=")
        if not sep:
            raise AttributeParseError(f"expected attr=value, got {item!r}")
        if name == "kill":
            if not _KILL_RE.fullmatch(value):
                raise AttributeParseError(f"kill: not a signal number: {value!r}")
            sig = int(value)
            if sig > MAX_SIGNAL:
                raise AttributeParseError(f"kill: {sig} not in 0..{MAX_SIGNAL}")
            fields["kill_signal"] = sig
        elif name == "killall":
            fields["killall"] = _parse_bool(name, value)
        elif name == "daemon":
            fields["daemon"] = _parse_bool(name, value)
        elif name == "shell":
            if not value.strip():
                raise AttributeParseError("shell: empty command prefix")
            fields["shell"] = None if value == "noshell" else value
        elif name == "stderr":
            if not value:
                raise AttributeParseError("stderr: empty path")
            fields["stderr_target"] = value
        else:
            raise AttributeParseError(f"unknown attribute {name!r}")
    return fields
