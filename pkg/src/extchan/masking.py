"""Masking store: replaces ``acc(...)`` subexpressions by ``dd(k)`` handles."""
from __future__ import annotations

import re
from typing import Callable

from .errors import BadIndex, StoreFileError, UnbalancedParens, UnknownCommand

Simplifier = Callable[[str], str]

_DD_RE = re.compile(r"(?<![A-Za-z_0-9])dd\(([0-9]+)\)")
_AT_REF_RE = re.compile(r"@\(([0-9]+)\)")


class MaskingStore:
    """Ordered table of stored expressions; entry k is addressed as dd(k)."""

    def __init__(self, entries=()):
        self.entries: list[str] = list(entries)

    @property
    def counter(self) -> int:
        return len(self.entries)

    def add(self, text: str) -> int:
        self.entries.append(text)
        return len(self.entries)

    def get(self, k: int) -> str:
        if not 1 <= k <= len(self.entries):
            raise BadIndex(f"dd({k}) is not defined (store holds {len(self.entries)})")
        return self.entries[k - 1]

    def save(self, path: str) -> None:
        try:
            with open(path, "w", encoding="utf-8") as f:
                for e in self.entries:
                    f.write(e + "\n")
        except OSError as exc:
            raise StoreFileError(f"cannot save to {path}: {exc}") from exc

    def load(self, path: str) -> None:
        """Replace the table with the lines of *path*."""
        try:
            with open(path, encoding="utf-8", newline="") as f:
                self.entries = [line[:-1] if line.endswith("\n") else line for line in f]
        except OSError as exc:
            raise StoreFileError(f"cannot load {path}: {exc}") from exc

    def __eq__(self, other):
        return isinstance(other, MaskingStore) and self.entries == other.entries


def find_acc(line: str) -> list[tuple[int, int, str]]:
    """Locate every ``acc(...)``; returns ``(start, end, argument)`` spans.

    Nested parentheses inside the argument are matched by depth counting.
    """
    spans = []
    pos = 0
    while True:
        i = line.find("acc(", pos)
        if i < 0:
            return spans
        if i > 0 and (line[i - 1].isalnum() or line[i - 1] == "_"):
            pos = i + 4
            continue
        depth = 0
        for j in range(i + 3, len(line)):
            if line[j] == "(":
                depth += 1
            elif line[j] == ")":
                depth -= 1
                if depth == 0:
                    spans.append((i, j + 1, line[i + 4 : j]))
                    pos = j + 1
                    break
        else:
            raise UnbalancedParens(f"unbalanced parentheses in acc() at column {i + 1}")


def _replace_acc(line: str, replacement: Callable[[str], str]) -> str:
    out = []
    pos = 0
    for start, end, arg in find_acc(line):
        out.append(line[pos:start])
        out.append(replacement(arg))
        pos = end
    out.append(line[pos:])
    return "".join(out)


def mask_line(
    store: MaskingStore, line: str, simplifier: Simplifier | None = None, filtering: bool = True
) -> str:
    """Replace each ``acc(expr)`` by ``dd(k)``, storing (simplified) expr as entry k."""

    def store_arg(arg):
        text = simplifier(arg) if (filtering and simplifier is not None) else arg
        return f"dd({store.add(text)})"

    return _replace_acc(line, store_arg)


def expand_line(store: MaskingStore, line: str) -> str:
    """Replace each ``dd(k)`` by ``(entry k)``."""
    return _DD_RE.sub(lambda m: f"({store.get(int(m.group(1)))})", line)


class MaskingGateway:
    """The ``@``-command gateway around a :class:`MaskingStore`.

    ``@f0``/``@f1`` switch simplification of acc() arguments off/on;
    ``@e0`` masks acc() into dd(k), ``@e1`` instead expands dd(k) and inlines
    acc() arguments; ``@v`` echoes text with ``@(k)`` replaced by entry k;
    ``@s``/``@r`` save and load the store.
    """

    def __init__(self, store: MaskingStore | None = None, simplifier: Simplifier | None = None):
        self.store = store if store is not None else MaskingStore()
        self.simplifier = simplifier
        self.filtering = True
        self.expand = False

    def process(self, line: str) -> list[str]:
        if line.startswith("@"):
            return self.command(line)
        if not self.expand:
            return [mask_line(self.store, line, self.simplifier, self.filtering)]
        line = expand_line(self.store, line)
        use = self.simplifier if (self.filtering and self.simplifier) else (lambda a: a)
        return [_replace_acc(line, lambda arg: f"({use(arg)})")]

    def command(self, line: str) -> list[str]:
        letter, arg = line[1:2], line[2:]
        if letter == "f" and arg in ("0", "1"):
            self.filtering = arg == "1"
            return []
        if letter == "e" and arg in ("0", "1"):
            self.expand = arg == "1"
            return []
        if letter == "v":
            return [_AT_REF_RE.sub(lambda m: self.store.get(int(m.group(1))), arg)]
        if letter == "s" and arg.strip():
            self.store.save(arg.strip())
            return []
        if letter == "r" and arg.strip():
            self.store.load(arg.strip())
            return []
        raise UnknownCommand(f"unknown gateway command {line!r}")


def gateway_command(gateway: MaskingGateway, line: str) -> list[str]:
    return gateway.command(line)
