"""Plain-text map expressions.

The accepted language is ordinary arithmetic in ``z`` over complex numbers::

    z^2 - 2
    (2z^2 + z) / (2 + z^2)
    (0.3,0.1) z + z^2          # (re,im) literal
    1+2i z^3 - z/2 + 1/2

Implicit multiplication (``2z``, ``(z+1)(z-1)``) and ``**`` for powers are
accepted. Division produces rational maps; the result is reduced with a
numerical GCD.
"""

from __future__ import annotations

import re

import numpy as np

from ..errors import ConstantMapError, ParseError
from .polynomial import Polynomial
from .rational import RationalMap

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[ij]?)|(?P<imag>[ij])(?![a-zA-Z])"
    r"|(?P<z>z)|(?P<op>\*\*|[-+*/^(),]))")


def _tokenize(text: str):
    text = text.replace("−", "-").replace("·", "*")
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col]!r} at column {col}", text, col)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "op" and val == "**":
            val = "^"
        out.append((kind, val, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(f"{msg} at column {tok[2]}", self.text, tok[2])

    def expect(self, val):
        t = self.peek()
        if t[1] != val:
            self.fail(f"expected {val!r}, found {t[1] or 'end of input'!r}")
        return self.take()

    # values are (numerator, denominator) polynomial pairs
    def parse(self):
        if self.peek()[0] == "end":
            self.fail("empty expression")
        v = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return v

    def expr(self):
        sign = 1
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        n, d = self.term()
        acc = (n.scale(sign), d)
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            n2, d2 = self.term()
            if op == "-":
                n2 = -n2
            acc = (acc[0] * d2 + n2 * acc[1], acc[1] * d2)
        return acc

    def _starts_factor(self, tok):
        return tok[0] in ("num", "imag", "z") or tok[1] == "("

    def term(self):
        acc = self.factor()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in ("*", "/"):
                self.take()
                n, d = self.factor()
                if tok[1] == "*":
                    acc = (acc[0] * n, acc[1] * d)
                else:
                    if n.is_zero():
                        self.fail("division by zero", tok)
                    acc = (acc[0] * d, acc[1] * n)
            elif self._starts_factor(tok):
                n, d = self.factor()
                acc = (acc[0] * n, acc[1] * d)
            else:
                return acc

    def factor(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            neg = False
            if self.peek()[1] == "-":
                self.take()
                neg = True
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be an integer", tok)
            k = int(tok[1])
            n, d = base
            if neg:
                if n.is_zero():
                    self.fail("negative power of zero", tok)
                n, d = d, n
            return (n ** k, d ** k)
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        one = Polynomial([1.0])
        if kind == "num":
            if val[-1] in "ij":
                return (Polynomial([complex(0, float(val[:-1]))]), one)
            return (Polynomial([float(val)]), one)
        if kind == "imag":
            return (Polynomial([1j]), one)
        if kind == "z":
            return (Polynomial([0.0, 1.0]), one)
        if val == "(":
            first = self.expr()
            if self.peek()[1] == ",":
                self.take()
                second = self.expr()
                self.expect(")")
                re_, im_ = _constant(first), _constant(second)
                if re_ is None or im_ is None:
                    self.fail("(re,im) literal needs constant parts", tok)
                return (Polynomial([re_ + 1j * im_]), one)
            self.expect(")")
            return first
        self.fail(f"unexpected {val or 'end of input'!r}", tok)


def _constant(pair):
    n, d = pair
    if n.degree <= 0 and d.degree == 0:
        return n.coeffs[0] / d.coeffs[0] if n.degree == 0 else 0j
    return None


def parse_map(text: str) -> RationalMap:
    """Parse a map expression into a reduced :class:`RationalMap`."""
    num, den = _Parser(text).parse()
    if den.is_zero():
        raise ParseError("denominator is zero", text, 0)
    try:
        return RationalMap(num, den)
    except ConstantMapError as exc:
        raise ConstantMapError(f"{text!r} is a constant map") from exc


def parse_point(text: str):
    """Parse a sphere point: a constant expression or ``inf``."""
    from .sphere import INF

    if text.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    num, den = _Parser(text).parse()
    c = _constant((num, den))
    if c is None:
        raise ParseError("point must be a constant", text, 0)
    return complex(c)


def _format_coeff(c: complex):
    if c.imag == 0:
        return repr(float(c.real))
    return f"({float(c.real)!r},{float(c.imag)!r})"


def format_poly(p: Polynomial) -> str:
    """Descending-power text form that :func:`parse_map` reads back exactly."""
    parts = []
    for k in range(p.degree, -1, -1):
        c = complex(p.coeffs[k])
        if c == 0:
            continue
        mono = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
        if c.imag == 0:
            sign = "-" if np.signbit(c.real) else "+"
            mag = abs(c.real)
            coef = "" if (mag == 1.0 and mono) else repr(mag)
            parts.append((sign, coef + mono))
        else:
            parts.append(("+", _format_coeff(c) + mono))
    if not parts:
        return "0"
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def format_map(R: RationalMap) -> str:
    """Text form with a monic denominator (a bare polynomial when it is constant)."""
    lead = R.den.leading
    num_p, den_p = R.num.scale(1 / lead), R.den.scale(1 / lead)
    num = format_poly(num_p)
    if den_p.degree == 0:
        return num
    den = format_poly(den_p)
    wrap = lambda s, p: s if (len(p.coeffs[p.coeffs != 0]) == 1 and not s.startswith("-")) else f"({s})"
    return f"{wrap(num, num_p)} / {wrap(den, den_p)}"
