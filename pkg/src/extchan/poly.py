"""Univariate polynomials and ratios over the rationals.

Coefficients are :class:`fractions.Fraction`, stored in ascending degree
with no trailing zeros. Everything is exact.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ExprSyntaxError, MixedVariables

MAX_EXPONENT = 10000


def _trim(coeffs) -> tuple[Fraction, ...]:
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class Polynomial:
    """Polynomial in one variable; ``coeffs[k]`` multiplies ``var**k``.

    Equality ignores the variable name, which is only used for printing.
    """

    __slots__ = ("coeffs", "var")

    def __init__(self, coeffs=(), var: str | None = None):
        self.coeffs = _trim(coeffs)
        self.var = var

    @classmethod
    def constant(cls, c, var=None) -> Polynomial:
        return cls((c,), var)

    @classmethod
    def monomial(cls, c, k: int, var=None) -> Polynomial:
        return cls([0] * k + [c], var)

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def _var(self, other: Polynomial) -> str | None:
        return self.var if self.var is not None else other.var

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == _trim((other,))
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial({format_poly(self)!r})"

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs], self.var)

    def __add__(self, other: Polynomial) -> Polynomial:
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Polynomial([x + y for x, y in zip(a, b)], self._var(other))

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self + (-other)

    def __mul__(self, other: Polynomial) -> Polynomial:
        if self.is_zero() or other.is_zero():
            return Polynomial((), self._var(other))
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Polynomial(out, self._var(other))

    def scale(self, c) -> Polynomial:
        return Polynomial([c * x for x in self.coeffs], self.var)

    def divmod(self, divisor: Polynomial) -> tuple[Polynomial, Polynomial]:
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dd = divisor.degree
        lc = divisor.leading
        quot = [Fraction(0)] * max(len(rem) - dd, 0)
        for k in range(len(rem) - dd - 1, -1, -1):
            c = rem[k + dd] / lc
            quot[k] = c
            if c:
                for j, b in enumerate(divisor.coeffs):
                    rem[k + j] -= c * b
        var = self._var(divisor)
        return Polynomial(quot, var), Polynomial(rem[:dd] if dd > 0 else (), var)

    def monic(self) -> Polynomial:
        if self.is_zero():
            return self
        return self.scale(1 / self.leading)

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Monic greatest common divisor by the Euclidean algorithm over Q.

    gcd(0, 0) is the zero polynomial.
    """
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic()


@dataclass
class Ratio:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero():
            raise ZeroDivisionError("zero denominator")

    @property
    def var(self) -> str | None:
        return self.num.var if self.num.var is not None else self.den.var

    @classmethod
    def of(cls, p: Polynomial) -> Ratio:
        return cls(p, Polynomial.constant(1, p.var))

    def equivalent(self, other: Ratio) -> bool:
        """Equal as rational functions (cross-multiplication)."""
        return self.num * other.den == other.num * self.den

    def is_constant(self) -> bool:
        return self.num.degree <= 0 and self.den.degree == 0

    def __add__(self, other: Ratio) -> Ratio:
        a, b = self, other
        one = Polynomial.constant(1)
        if a.den == b.den:
            return Ratio(a.num + b.num, a.den)
        if b.den == one:
            return Ratio(a.num + b.num * a.den, a.den)
        if a.den == one:
            return Ratio(a.num * b.den + b.num, b.den)
        return Ratio(a.num * b.den + b.num * a.den, a.den * b.den)

    def __neg__(self) -> Ratio:
        return Ratio(-self.num, self.den)

    def __sub__(self, other: Ratio) -> Ratio:
        return self + (-other)

    def __mul__(self, other: Ratio) -> Ratio:
        return Ratio(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: Ratio) -> Ratio:
        if other.num.is_zero():
            raise ZeroDivisionError("division by zero")
        return Ratio(self.num * other.den, self.den * other.num)

    def __pow__(self, n: int) -> Ratio:
        base = self
        if n < 0:
            base = Ratio.of(Polynomial.constant(1, self.var)) / self
            n = -n
        result = Ratio.of(Polynomial.constant(1, self.var))
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result


def gcd_contract(r: Ratio) -> Ratio:
    """Cancel the gcd of numerator and denominator; make the denominator monic."""
    var = r.var
    if r.num.is_zero():
        return Ratio(Polynomial((), var), Polynomial.constant(1, var))
    g = poly_gcd(r.num, r.den)
    num, rem_n = r.num.divmod(g)
    den, rem_d = r.den.divmod(g)
    assert rem_n.is_zero() and rem_d.is_zero()
    lc = den.leading
    num, den = num.scale(1 / lc), den.scale(1 / lc)
    num.var = den.var = var
    return Ratio(num, den)


# -- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


class _Parser:
    def __init__(self, text: str):
        self.tokens = self._tokenize(text)
        self.pos = 0
        self.var: str | None = None

    @staticmethod
    def _tokenize(text):
        tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ExprSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r} at {pos}")
            pos = m.end()
            if m.group(1):
                tokens.append(("num", int(m.group(1))))
            elif m.group(2):
                tokens.append(("name", m.group(2)))
            else:
                op = m.group(3)
                tokens.append(("op", "^" if op == "**" else op))
        return tokens

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, op):
        if self.take() != ("op", op):
            raise ExprSyntaxError(f"expected {op!r}")

    def parse(self) -> Ratio:
        if not self.tokens:
            raise ExprSyntaxError("empty expression")
        r = self.expr()
        if self.pos != len(self.tokens):
            raise ExprSyntaxError(f"unexpected {self.peek()[1]!r}")
        return r

    def expr(self):
        r = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            r = r + rhs if op == "+" else r - rhs
        return r

    def term(self):
        r = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            r = r * rhs if op == "*" else r / rhs
        return r

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exp = gcd_contract(self.unary())
            if not exp.is_constant() or exp.num.leading.denominator != 1:
                raise ExprSyntaxError("exponent must be an integer constant")
            n = int(exp.num.leading)
            if abs(n) > MAX_EXPONENT:
                raise ExprSyntaxError(f"exponent {n} too large")
            return base**n
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return Ratio.of(Polynomial.constant(value))
        if kind == "name":
            if self.var is None:
                self.var = value
            elif value != self.var:
                raise MixedVariables(f"more than one variable: {self.var!r} and {value!r}")
            return Ratio.of(Polynomial.monomial(1, 1, value))
        if (kind, value) == ("op", "("):
            r = self.expr()
            self.expect(")")
            return r
        raise ExprSyntaxError("unexpected end of expression" if kind is None else f"unexpected {value!r}")


def parse_poly_expr(text: str) -> Ratio:
    """Parse a one-variable rational expression (integers, + - * / ^, parens).

    A single trailing ``;`` is allowed. The result is not simplified.
    """
    text = text.strip()
    if text.endswith(";"):
        text = text[:-1]
    p = _Parser(text)
    try:
        r = p.parse()
    except ZeroDivisionError as exc:
        raise ExprSyntaxError(str(exc)) from None
    r.num.var = r.den.var = p.var
    return r


# -- printing --------------------------------------------------------------


def _terms(p: Polynomial, var: str, descending: bool):
    items = [(k, c) for k, c in enumerate(p.coeffs) if c]
    if descending:
        items.reverse()
    for k, c in items:
        mag = abs(c)
        if k == 0:
            body = str(mag)
        else:
            power = var if k == 1 else f"{var}^{k}"
            body = power if mag == 1 else f"{mag}*{power}"
        yield c < 0, body


def format_poly(p: Polynomial, var: str | None = None, descending: bool = False) -> str:
    """Canonical text: explicit ``*`` and ``^``, no spaces, e.g. ``3+2*d``."""
    var = var or p.var or "x"
    out = []
    for i, (negative, body) in enumerate(_terms(p, var, descending)):
        if negative:
            out.append("-" + body)
        else:
            out.append(body if i == 0 else "+" + body)
    return "".join(out) or "0"


def format_ratio(r: Ratio, descending: bool = False) -> str:
    var = r.var or "x"
    num = format_poly(r.num, var, descending)
    if r.den == Polynomial.constant(1):
        return num
    den = format_poly(r.den, var, descending)
    nonzero = [c for c in r.num.coeffs if c]
    if len(nonzero) > 1 or (nonzero and nonzero[0].denominator != 1):
        num = f"({num})"
    if sum(1 for c in r.den.coeffs if c) > 1 or r.den.leading != 1:
        den = f"({den})"
    return f"{num}/{den}"
