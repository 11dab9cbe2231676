"""Line-buffered text filters for translating between algebra dialects.

Each filter maps one input line (without its newline) to zero or more
output lines, immediately. Only :class:`LineJoinUntilMarker` holds text back,
until its end marker arrives.
"""
from __future__ import annotations

import logging
import re
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

_NEG_POWER_RE = re.compile(r"\^-([0-9]+)")
_SYMBOLIC_NEG_POWER_RE = re.compile(r"\^-(?![0-9])")


class LineFilter:
    def feed(self, line: str) -> list[str]:
        raise NotImplementedError

    def flush(self) -> list[str]:
        """Emit anything still buffered at end of input."""
        return []


class PromptInject(LineFilter):
    """Turn each end marker into a line break followed by a prompt line."""

    def __init__(self, marker: str = "$", prompt: str = "P"):
        if len(marker) != 1:
            raise ValueError("end marker must be a single character")
        self.marker = marker
        self.prompt = prompt

    def feed(self, line):
        pieces = line.split(self.marker)
        out = []
        for piece in pieces[:-1]:
            out += [piece, self.prompt]
        if pieces[-1] or len(pieces) == 1:
            out.append(pieces[-1])
        return out


class BlankLineDrop(LineFilter):
    def feed(self, line):
        return [line] if line else []


class NegPowerParenthesize(LineFilter):
    """``x^-3`` -> ``x^(-3)``. Symbolic exponents such as ``x^-n`` are left alone."""

    def feed(self, line):
        if _SYMBOLIC_NEG_POWER_RE.search(line):
            log.warning("non-numeric negative exponent left unchanged: %r", line)
        return [_NEG_POWER_RE.sub(r"^(-\1)", line)]


class PowerToDoubleStar(LineFilter):
    def feed(self, line):
        return [line.replace("^", "**")]


class DoubleStarToCaret(LineFilter):
    def feed(self, line):
        return [line.replace("**", "^")]


class LineJoinUntilMarker(LineFilter):
    """Glue lines together until the end marker, then emit the text and a prompt."""

    def __init__(self, marker: str = "$", prompt: str = "P"):
        if len(marker) != 1:
            raise ValueError("end marker must be a single character")
        self.marker = marker
        self.prompt = prompt
        self._held = ""

    def feed(self, line):
        pieces = (self._held + line).split(self.marker)
        self._held = pieces.pop()
        out = []
        for piece in pieces:
            out += [piece, self.prompt]
        return out

    def flush(self):
        held, self._held = self._held, ""
        return [held] if held else []


class Pipeline(LineFilter):
    """Left-to-right composition; itself a filter, so pipelines nest."""

    def __init__(self, filters: Iterable[LineFilter]):
        self.filters = list(filters)

    def _through(self, lines, start):
        for f in self.filters[start:]:
            lines = [out for line in lines for out in f.feed(line)]
        return lines

    def feed(self, line):
        return self._through([line], 0)

    def flush(self):
        out: list[str] = []
        for i, f in enumerate(self.filters):
            out += self._through(f.flush(), i + 1)
        return out


def run_filter(f: LineFilter, line: str) -> list[str]:
    return f.feed(line)


def compose(filters: Iterable[LineFilter], lines: Iterable[str]) -> Iterator[str]:
    """Stream *lines* through *filters*.

    Output for each input line is yielded before the next one is pulled.
    """
    pipe = Pipeline(filters)
    for line in lines:
        yield from pipe.feed(line)
    yield from pipe.flush()


def _marker_args(args: str | None) -> tuple[str, str]:
    if not args:
        return "$", "P"
    marker, _, prompt = args.partition(",")
    return marker, prompt


FILTER_NAMES = {
    "prompt-inject": lambda a: PromptInject(*_marker_args(a)),
    "drop-blank": lambda a: BlankLineDrop(),
    "neg-power": lambda a: NegPowerParenthesize(),
    "caret-to-star": lambda a: PowerToDoubleStar(),
    "star-to-caret": lambda a: DoubleStarToCaret(),
    "join-until": lambda a: LineJoinUntilMarker(*_marker_args(a)),
}


def filter_from_name(text: str) -> LineFilter:
    """Build a filter from ``name[:args]``, e.g. ``prompt-inject:$,P``."""
    name, _, args = text.partition(":")
    try:
        factory = FILTER_NAMES[name]
    except KeyError:
        raise ValueError(f"unknown filter {name!r}; known: {', '.join(FILTER_NAMES)}") from None
    takes_args = name in ("prompt-inject", "join-until")
    if args and not takes_args:
        raise ValueError(f"filter {name!r} takes no arguments")
    return factory(args or None)
