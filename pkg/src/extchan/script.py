"""A small line-oriented command language for driving external channels.

Instructions start with ``#``, comment lines with ``*``. Every other line is
a data line: statements terminated by ``;`` that are recorded (``Local``,
``Drop``) or listed (``Print``), never evaluated. Backtick references
```name'`` are replaced by variable values when the line executes.

Text read from an external command or a ``#pipe`` command can be spliced
back into the input; it is parsed and executed before the next line.
"""
from __future__ import annotations

import logging
import os
import re
import subprocess
import sys
from dataclasses import dataclass, field
from typing import TextIO

from .channels import ChannelRegistry
from .errors import ExtchanError, ScriptError, ScriptSyntaxError

log = logging.getLogger(__name__)

SHELL = ["/bin/sh", "-c"]


@dataclass
class Instruction:
    lineno: int = field(default=0, kw_only=True)


@dataclass
class External(Instruction):
    var: str | None
    command: str


@dataclass
class ToExternal(Instruction):
    fmt: str


@dataclass
class FromExternal(Instruction):
    echo: str | None = None  # "+", "-" or None
    var: str | None = None
    maxlength: str | None = None


@dataclass
class Prompt(Instruction):
    text: str


@dataclass
class SetExternal(Instruction):
    expr: str


@dataclass
class RmExternal(Instruction):
    expr: str | None


@dataclass
class SetExternalAttr(Instruction):
    spec: str


@dataclass
class System(Instruction):
    command: str


@dataclass
class Pipe(Instruction):
    command: str


@dataclass
class Define(Instruction):
    name: str
    value: str


@dataclass
class Do(Instruction):
    var: str
    start: str
    stop: str
    end: int = -1  # index of the matching EndDo


@dataclass
class EndDo(Instruction):
    pass


@dataclass
class WriteFile(Instruction):
    path: str
    fmt: str


@dataclass
class RemoveFile(Instruction):
    path: str


@dataclass
class Echo(Instruction):
    fmt: str


@dataclass
class Data(Instruction):
    text: str


@dataclass
class Comment(Instruction):
    pass


_NAME = r"\$?[A-Za-z_][A-Za-z_0-9]*"
_KEYWORD_RE = re.compile(r"#([A-Za-z]+)([+-]?)(.*)", re.S)
_NAME_RE = re.compile(_NAME)
_DO_RE = re.compile(rf"({_NAME})\s*=\s*([^,\s]+)\s*,\s*(\S+)")
_FILE_RE = re.compile(r"<([^>]*)>\s*(.*)", re.S)
_REF_RE = re.compile(r"`(" + _NAME + r")'")
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


def _quoted(text: str, lineno: int) -> tuple[str, str]:
    """Split a leading double-quoted literal off *text*.

    Returns the raw content (escapes left as written) and the remainder.
    """
    if not text.startswith('"'):
        raise ScriptSyntaxError("expected a double-quoted string", lineno)
    i = 1
    while i < len(text):
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == '"':
            return text[1:i], text[i + 1 :]
        i += 1
    raise ScriptSyntaxError("unterminated string", lineno)


def _only_quoted(args: str, lineno: int) -> str:
    fmt, rest = _quoted(args.strip(), lineno)
    if rest.strip():
        raise ScriptSyntaxError(f"unexpected text after string: {rest.strip()!r}", lineno)
    return fmt


def _required(args: str, what: str, lineno: int) -> str:
    args = args.strip()
    if not args:
        raise ScriptSyntaxError(f"missing {what}", lineno)
    return args


def _parse_fromexternal(sign: str, args: str, lineno: int) -> FromExternal:
    ins = FromExternal(echo=sign or None, lineno=lineno)
    args = args.strip()
    if not args:
        return ins
    var, rest = _quoted(args, lineno)
    if not _NAME_RE.fullmatch(var):
        raise ScriptSyntaxError(f"bad variable name {var!r}", lineno)
    ins.var = var
    rest = rest.strip()
    if rest.startswith(","):
        rest = rest[1:].strip()
    if rest:
        if not (rest.isdigit() or _REF_RE.fullmatch(rest)):
            raise ScriptSyntaxError(f"bad maxlength {rest!r}", lineno)
        ins.maxlength = rest
    return ins


def _parse_instruction(keyword: str, sign: str, args: str, lineno: int) -> Instruction:
    kw = keyword.lower()
    if sign and kw != "fromexternal":
        raise ScriptSyntaxError(f"#{keyword} takes no +/- flag", lineno)
    if kw == "external":
        args = args.strip()
        var = None
        if args.startswith('"'):
            var, args = _quoted(args, lineno)
            if not _NAME_RE.fullmatch(var):
                raise ScriptSyntaxError(f"bad variable name {var!r}", lineno)
        return External(var, _required(args, "system command", lineno), lineno=lineno)
    if kw == "toexternal":
        return ToExternal(_only_quoted(args, lineno), lineno=lineno)
    if kw == "fromexternal":
        return _parse_fromexternal(sign, args, lineno)
    if kw == "prompt":
        return Prompt(args.strip(), lineno=lineno)
    if kw == "setexternal":
        return SetExternal(_required(args, "descriptor", lineno), lineno=lineno)
    if kw == "rmexternal":
        return RmExternal(args.strip() or None, lineno=lineno)
    if kw == "setexternalattr":
        return SetExternalAttr(_required(args, "attribute list", lineno), lineno=lineno)
    if kw == "system":
        return System(_required(args, "system command", lineno), lineno=lineno)
    if kw == "pipe":
        return Pipe(_required(args, "system command", lineno), lineno=lineno)
    if kw == "define":
        args = args.strip()
        m = _NAME_RE.match(args)
        if not m:
            raise ScriptSyntaxError("#define needs a variable name", lineno)
        value = args[m.end() :].strip()
        if value.startswith('"'):
            value = _only_quoted(value, lineno)
        return Define(m.group(0), value, lineno=lineno)
    if kw == "do":
        m = _DO_RE.fullmatch(args.strip())
        if not m:
            raise ScriptSyntaxError("expected #do var = from,to", lineno)
        return Do(m.group(1), m.group(2), m.group(3), lineno=lineno)
    if kw == "enddo":
        if args.strip():
            raise ScriptSyntaxError("#enddo takes no arguments", lineno)
        return EndDo(lineno=lineno)
    if kw in ("write", "remove"):
        m = _FILE_RE.fullmatch(args.strip())
        if not m or not m.group(1):
            raise ScriptSyntaxError(f"expected #{kw} <file> ...", lineno)
        if kw == "remove":
            if m.group(2).strip():
                raise ScriptSyntaxError("unexpected text after file name", lineno)
            return RemoveFile(m.group(1), lineno=lineno)
        return WriteFile(m.group(1), _only_quoted(m.group(2), lineno), lineno=lineno)
    if kw == "echo":
        return Echo(_only_quoted(args, lineno), lineno=lineno)
    raise ScriptSyntaxError(f"unknown instruction #{keyword}", lineno)


def parse_script(source: str, first_lineno: int = 1) -> list[Instruction]:
    """Parse *source* into a flat instruction list with resolved loop bounds."""
    program: list[Instruction] = []
    open_loops: list[int] = []
    for lineno, raw in enumerate(source.splitlines(), first_lineno):
        line = raw.strip()
        if line.startswith("*"):
            ins: Instruction = Comment(lineno=lineno)
        elif line.startswith("#"):
            m = _KEYWORD_RE.fullmatch(line)
            if not m:
                raise ScriptSyntaxError("malformed instruction", lineno)
            ins = _parse_instruction(m.group(1), m.group(2), m.group(3), lineno)
        else:
            ins = Data(raw, lineno=lineno)
        if isinstance(ins, Do):
            open_loops.append(len(program))
        elif isinstance(ins, EndDo):
            if not open_loops:
                raise ScriptSyntaxError("#enddo without #do", lineno)
            start = open_loops.pop()
            program[start].end = len(program)
        program.append(ins)
    if open_loops:
        raise ScriptSyntaxError("#do without #enddo", program[open_loops[-1]].lineno)
    return program


def expand_escapes(text: str) -> str:
    """Expand ``\\n``, ``\\t``, ``\\\\`` and ``\\"``; other backslashes stay."""
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text) and text[i + 1] in _ESCAPES:
            out.append(_ESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


class _EndOfProgram(Exception):
    pass


def _decode(data: bytes) -> str:
    return data.decode("utf-8", "surrogateescape")


def _encode(text: str) -> bytes:
    return text.encode("utf-8", "surrogateescape")


class Interpreter:
    """Executes parsed programs against a :class:`ChannelRegistry`.

    ``expressions`` collects the right-hand sides of ``Local`` statements.
    """

    def __init__(
        self,
        registry: ChannelRegistry | None = None,
        variables: dict | None = None,
        output: TextIO | None = None,
        echo: bool = False,
    ):
        self.registry = registry if registry is not None else ChannelRegistry()
        self.variables = variables if variables is not None else {}
        self.output = output if output is not None else sys.stdout
        self.echo = echo
        self.expressions: dict[str, str] = {}
        self._pending: list[str] = []

    def interpolate(self, text: str, lineno: int | None = None) -> str:
        """Replace `name' references, innermost first (`PIPE`k'_' works).

        Substituted values are not scanned again.
        """
        stack: list[list[str]] = [[]]
        for ch in text:
            if ch == "`":
                stack.append([])
            elif ch == "'" and len(stack) > 1:
                inner = "".join(stack.pop())
                if _NAME_RE.fullmatch(inner):
                    if inner not in self.variables:
                        raise ScriptError(f"undefined variable {inner!r}", lineno)
                    stack[-1].append(self.variables[inner])
                else:
                    stack[-1].append("`" + inner + "'")
            else:
                stack[-1].append(ch)
        while len(stack) > 1:
            inner = "".join(stack.pop())
            stack[-1].append("`" + inner)
        return "".join(stack[0])

    def format(self, fmt: str, lineno: int) -> str:
        return expand_escapes(self.interpolate(fmt, lineno))

    def _descriptor(self, expr: str, lineno: int) -> int:
        text = self.interpolate(expr, lineno).strip()
        if not text.isdigit():
            raise ScriptError(f"not a descriptor: {text!r}", lineno)
        return int(text)

    def run(self, program: list[Instruction]) -> None:
        """Execute *program*; raises ScriptError naming the failing line."""
        try:
            self._run(program, 0, len(program))
        except _EndOfProgram:
            pass
        self.output.flush()

    def run_source(self, source: str) -> None:
        self.run(parse_script(source))

    def _run(self, program, start, end):
        pc = start
        while pc < end:
            ins = program[pc]
            if isinstance(ins, Do):
                lo = self._loop_bound(ins.start, ins.lineno)
                hi = self._loop_bound(ins.stop, ins.lineno)
                for value in range(lo, hi + 1):
                    self.variables[ins.var] = str(value)
                    self._run(program, pc + 1, ins.end)
                pc = ins.end + 1
                continue
            try:
                self._exec(ins)
            except _EndOfProgram:
                raise
            except ScriptError as exc:
                if exc.lineno is None:
                    raise ScriptError(str(exc), ins.lineno) from exc
                raise
            except (ExtchanError, OSError, ValueError) as exc:
                raise ScriptError(str(exc), ins.lineno) from exc
            pc += 1

    def _loop_bound(self, text, lineno):
        value = self.interpolate(text, lineno).strip()
        try:
            return int(value)
        except ValueError:
            raise ScriptError(f"loop bound is not an integer: {value!r}", lineno) from None

    def _splice(self, text: str, lineno: int):
        try:
            program = parse_script(text)
        except ScriptSyntaxError as exc:
            raise ScriptError(f"in spliced text: {exc}", lineno) from exc
        try:
            self._run(program, 0, len(program))
        except ScriptError as exc:
            raise ScriptError(f"in spliced text: {exc}", lineno) from exc

    def _exec(self, ins: Instruction):
        reg = self.registry
        n = ins.lineno
        if isinstance(ins, (Comment, EndDo)):
            return
        if isinstance(ins, Data):
            self._data_line(self.interpolate(ins.text, n))
        elif isinstance(ins, External):
            cid = reg.open_channel(self.interpolate(ins.command, n))
            if ins.var:
                self.variables[ins.var] = str(cid)
        elif isinstance(ins, ToExternal):
            reg.send(_encode(self.format(ins.fmt, n)))
        elif isinstance(ins, FromExternal):
            maxlength = None
            if ins.maxlength is not None:
                maxlength = self._descriptor(ins.maxlength, n)
            text = _decode(reg.read_until_prompt(maxlength))
            if ins.echo == "+" or (ins.echo is None and self.echo):
                self.output.write(text + "\n")
            if ins.var:
                self.variables[ins.var] = text
            else:
                self._splice(text, n)
        elif isinstance(ins, Prompt):
            reg.set_prompt(_encode(self.interpolate(ins.text, n)))
        elif isinstance(ins, SetExternal):
            reg.set_current(self._descriptor(ins.expr, n))
        elif isinstance(ins, RmExternal):
            reg.remove_channel(None if ins.expr is None else self._descriptor(ins.expr, n))
        elif isinstance(ins, SetExternalAttr):
            reg.set_default_attrs(self.interpolate(ins.spec, n))
        elif isinstance(ins, System):
            self.output.flush()
            status = subprocess.run(SHELL + [self.interpolate(ins.command, n)]).returncode
            log.info("line %d: #system exited with status %d", n, status)
        elif isinstance(ins, Pipe):
            self.output.flush()
            proc = subprocess.run(SHELL + [self.interpolate(ins.command, n)], stdout=subprocess.PIPE)
            log.info("line %d: #pipe exited with status %d", n, proc.returncode)
            self._splice(_decode(proc.stdout), n)
        elif isinstance(ins, Define):
            self.variables[ins.name] = self.interpolate(ins.value, n)
        elif isinstance(ins, WriteFile):
            with open(self.interpolate(ins.path, n), "a", encoding="utf-8", errors="surrogateescape") as f:
                f.write(self.format(ins.fmt, n) + "\n")
        elif isinstance(ins, RemoveFile):
            try:
                os.remove(self.interpolate(ins.path, n))
            except FileNotFoundError:
                pass
        elif isinstance(ins, Echo):
            self.output.write(self.format(ins.fmt, n) + "\n")
        else:  # pragma: no cover
            raise ScriptError(f"cannot execute {type(ins).__name__}", n)

    # Data lines: statements are collected up to ';' and mostly ignored.

    def _data_line(self, text: str):
        stripped = text.strip()
        if not self._pending and stripped.startswith("."):
            if stripped.lower().startswith(".end"):
                raise _EndOfProgram()
            return
        while ";" in text:
            head, text = text.split(";", 1)
            self._pending.append(head)
            self._statement(" ".join(p.strip() for p in self._pending).strip())
            self._pending = []
        if text.strip():
            self._pending.append(text)

    def _statement(self, stmt: str):
        word = stmt.split(None, 1)[0].lower() if stmt else ""
        rest = stmt[len(word) :].strip()
        if word in ("local", "l"):
            name, sep, rhs = rest.partition("=")
            name = name.strip()
            if not sep or not _NAME_RE.fullmatch(name):
                raise ScriptError(f"malformed Local statement {stmt!r}")
            rhs = re.sub(r"\s+", "", rhs)
            self.expressions[name] = rhs
            self.output.write(f"Local {name} = {rhs};\n")
        elif word == "print":
            names = [s.strip() for s in rest.split(",") if s.strip()] or list(self.expressions)
            for name in names:
                if name in self.expressions:
                    self.output.write(f"   {name} =\n      {self.expressions[name]};\n\n")
        elif word == "drop":
            names = [s.strip() for s in rest.split(",") if s.strip()] or list(self.expressions)
            for name in names:
                self.expressions.pop(name, None)


def execute(
    program: list[Instruction],
    registry: ChannelRegistry,
    variables: dict,
    output: TextIO,
    *,
    echo: bool = False,
    diagnostics: TextIO | None = None,
) -> int:
    """Run *program*; return 0 on success, 1 after printing a diagnostic."""
    interp = Interpreter(registry, variables, output, echo)
    try:
        interp.run(program)
    except ScriptError as exc:
        output.flush()
        print(f"extsh: {exc}", file=diagnostics or sys.stderr)
        return 1
    return 0
