"""Exact symbolic scalar expressions.

Everything downstream (forms, metrics, connections, transforms) computes
over the expression trees defined here.  Design points:

* constants are exact rationals (`fractions.Fraction`); floating point
  enters only in `eval_at`;
* trees are immutable and built through canonicalizing constructors, so
  `simplify` is idempotent by construction;
* zero-testing is tri-state (`ZERO` / `NONZERO` / `UNKNOWN`) backed by a
  documented, seeded sampling policy;
* unspecified profiles like a(t) or f(z - t) are opaque function symbols
  with formal derivatives a', a'', ...

The rewrite set applied by the constructors and `simplify` is deliberately
bounded: rational folding, flatten/sort of commutative operands under a
fixed total order, like-term and like-factor collection, integer-power
rules, distribution of products over sums (expanded normal form), special
values at 0/1 for the built-in functions, and the single trigonometric
rule sin(u)^2 + cos(u)^2 -> 1.  Nothing else.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import (
    DomainError,
    ExprSyntaxError,
    UnboundSymbolError,
    UnknownSymbolError,
)

__all__ = [
    "Chart",
    "Expr",
    "Rat",
    "Sym",
    "Func",
    "OpaqueFunc",
    "Pow",
    "Mul",
    "Add",
    "ZERO",
    "ONE",
    "rational",
    "sym",
    "add",
    "mul",
    "pow_",
    "neg",
    "sub",
    "div",
    "func",
    "opaque",
    "diff",
    "simplify",
    "substitute",
    "substitute_function",
    "free_symbols",
    "opaque_calls",
    "to_text",
    "parse_expr",
    "eval_at",
    "fn_key",
    "SamplingPolicy",
    "DEFAULT_POLICY",
    "ZeroVerdict",
    "is_zero",
]

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

BUILTIN_FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")


@dataclass(frozen=True)
class Chart:
    """An ordered tuple of coordinate names, e.g. (t, x, y, z)."""

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(names) < 1:
            raise ValueError("chart needs at least one coordinate")
        seen = set()
        for n in names:
            if not _IDENT_RE.match(n):
                raise ValueError(f"coordinate name {n!r} is not a valid identifier")
            if n in seen:
                raise ValueError(f"duplicate coordinate name {n!r}")
            seen.add(n)
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __iter__(self):
        return iter(self.names)


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------
#
# Canonical ("expanded normal") form maintained by the constructors:
#   Add   - >= 2 terms, sorted, no nested Add, like terms merged, at most
#           one rational term;
#   Mul   - >= 2 factors, sorted, no nested Mul, at most one leading
#           rational coefficient, no repeated bases, no Add factor except
#           inside a negative-exponent Pow;
#   Pow   - integer exponent not in {0, 1}; base is an atom or an Add with
#           a negative exponent (positive powers of sums are expanded);
#   atoms - Rat, Sym, Func (built-in), OpaqueFunc.
#
# Every node carries a structural `key` tuple that induces the fixed total
# order used for sorting and doubles as the equality/hash witness.


class Expr:
    __slots__ = ("key", "_h")

    def __eq__(self, other):
        return self is other or (isinstance(other, Expr) and self.key == other.key)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"<Expr {to_text(self)}>"


class Rat(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value if isinstance(value, Fraction) else Fraction(value)
        self.key = (0, self.value.numerator, self.value.denominator)
        self._h = hash(self.key)


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self.key = (1, name)
        self._h = hash(self.key)


class Func(Expr):
    """Built-in unary function application (sin, cos, tan, exp, ln, sqrt)."""

    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        self.name = name
        self.arg = arg
        self.key = (2, name, arg.key)
        self._h = hash(self.key)


class OpaqueFunc(Expr):
    """Unspecified univariate profile, e.g. a(t); `order` counts primes."""

    __slots__ = ("name", "arg", "order")

    def __init__(self, name: str, arg: Expr, order: int = 0):
        self.name = name
        self.arg = arg
        self.order = order
        self.key = (3, name, order, arg.key)
        self._h = hash(self.key)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        self.base = base
        self.exp = exp
        self.key = (4, base.key, exp)
        self._h = hash(self.key)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = factors
        self.key = (5, tuple(f.key for f in factors))
        self._h = hash(self.key)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self.key = (6, tuple(t.key for t in terms))
        self._h = hash(self.key)


ZERO = Rat(0)
ONE = Rat(1)


# ---------------------------------------------------------------------------
# Canonicalizing constructors
# ---------------------------------------------------------------------------


def rational(value) -> Rat:
    """Exact rational constant; accepts int, Fraction, or numeric string."""
    return Rat(Fraction(value))


def sym(name: str) -> Sym:
    return Sym(name)


def _coeff_monomial(term: Expr) -> tuple[Fraction, Expr]:
    """Split a (non-Add) canonical term into rational coefficient x rest."""
    if isinstance(term, Rat):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.factors[0], Rat):
        rest = term.factors[1:]
        mono = rest[0] if len(rest) == 1 else Mul(rest)
        return term.factors[0].value, mono
    return Fraction(1), term


def _scale(coeff: Fraction, mono: Expr) -> Expr:
    """coeff * mono for an Add-free canonical monomial."""
    if coeff == 0:
        return ZERO
    if mono is ONE or (isinstance(mono, Rat) and mono.value == 1):
        return Rat(coeff)
    if isinstance(mono, Rat):
        return Rat(coeff * mono.value)
    if coeff == 1:
        return mono
    if isinstance(mono, Mul):
        return Mul((Rat(coeff),) + mono.factors)
    return Mul((Rat(coeff), mono))


def add(*args: Expr) -> Expr:
    """Canonical sum: flatten, fold rationals, merge like terms, sort."""
    rat_sum = Fraction(0)
    by_mono: dict[tuple, list] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.terms)
        elif isinstance(a, Rat):
            rat_sum += a.value
        else:
            c, mono = _coeff_monomial(a)
            slot = by_mono.get(mono.key)
            if slot is None:
                by_mono[mono.key] = [c, mono]
            else:
                slot[0] += c
    terms = [_scale(c, m) for c, m in by_mono.values() if c != 0]
    if rat_sum != 0:
        terms.append(Rat(rat_sum))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=lambda t: t.key)
    return Add(tuple(terms))


def _as_base_exp(f: Expr) -> tuple[Expr, int]:
    if isinstance(f, Pow):
        return f.base, f.exp
    return f, 1


def mul(*args: Expr) -> Expr:
    """Canonical product: flatten, fold coefficient, merge exponents of
    equal bases, distribute over sums, sort."""
    coeff = Fraction(1)
    bases: dict[tuple, list] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Mul):
            stack.extend(a.factors)
        elif isinstance(a, Rat):
            coeff *= a.value
        else:
            b, e = _as_base_exp(a)
            slot = bases.get(b.key)
            if slot is None:
                bases[b.key] = [b, e]
            else:
                slot[1] += e
    if coeff == 0:
        return ZERO

    factors: list[Expr] = []
    expand: list[Expr] = []  # copies of Add factors to distribute
    for b, e in bases.values():
        if e == 0:
            continue
        if isinstance(b, Add) and e > 0:
            expand.extend([b] * e)
        else:
            piece = pow_(b, e)
            if isinstance(piece, Rat):
                coeff *= piece.value
            else:
                factors.append(piece)
    if coeff == 0:
        return ZERO

    if not expand:
        if not factors:
            return Rat(coeff)
        factors.sort(key=lambda f: f.key)
        if coeff != 1:
            factors.insert(0, Rat(coeff))
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    base = Rat(coeff) if not factors else _scale(coeff, mul(*factors))
    terms = [base]
    for a in expand:
        terms = [mul(t, u) for t in terms for u in a.terms]
    return add(*terms)


def pow_(base: Expr, exp: int) -> Expr:
    """Integer power with folding, merging, and expansion of sum bases."""
    if not isinstance(exp, int):
        raise TypeError("exponents must be Python ints")
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Rat):
        if base.value == 0 and exp < 0:
            raise DomainError("0 raised to a negative power")
        return Rat(base.value**exp)
    if isinstance(base, Mul):
        return mul(*(pow_(f, exp) for f in base.factors))
    if isinstance(base, Pow):
        return pow_(base.base, base.exp * exp)
    if isinstance(base, Add) and exp > 0:
        out = base
        for _ in range(exp - 1):
            out = mul(out, base)
        return out
    return Pow(base, exp)


def neg(e: Expr) -> Expr:
    return mul(Rat(-1), e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, pow_(b, -1))


def func(name: str, arg: Expr) -> Expr:
    """Built-in function application with exact special values at 0 and 1."""
    if name not in BUILTIN_FUNCTIONS:
        raise ValueError(f"not a built-in function: {name}")
    if isinstance(arg, Rat):
        v = arg.value
        if v == 0:
            if name in ("sin", "tan"):
                return ZERO
            if name in ("cos", "exp"):
                return ONE
            if name == "sqrt":
                return ZERO
            if name == "ln":
                raise DomainError("ln(0)")
        if v == 1:
            if name == "ln":
                return ZERO
            if name == "sqrt":
                return ONE
        if name == "sqrt" and v >= 0:
            num, den = v.numerator, v.denominator
            rn, rd = math.isqrt(num), math.isqrt(den)
            if rn * rn == num and rd * rd == den:
                return Rat(Fraction(rn, rd))
    return Func(name, arg)


def opaque(name: str, arg: Expr, order: int = 0) -> OpaqueFunc:
    return OpaqueFunc(name, arg, order)


# ---------------------------------------------------------------------------
# Tree walkers
# ---------------------------------------------------------------------------


def _children(e: Expr):
    if isinstance(e, (Func, OpaqueFunc)):
        yield e.arg
    elif isinstance(e, Pow):
        yield e.base
    elif isinstance(e, Mul):
        yield from e.factors
    elif isinstance(e, Add):
        yield from e.terms


def free_symbols(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Sym):
            out.add(n.name)
        else:
            stack.extend(_children(n))
    return out


def opaque_calls(e: Expr) -> dict[str, int]:
    """Map opaque function name -> highest derivative order appearing."""
    out: dict[str, int] = {}
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, OpaqueFunc):
            out[n.name] = max(out.get(n.name, 0), n.order)
        stack.extend(_children(n))
    return out


def depends_on(e: Expr, name: str) -> bool:
    return name in free_symbols(e)


# ---------------------------------------------------------------------------
# Differentiation and substitution
# ---------------------------------------------------------------------------


def diff(e: Expr, name: str) -> Expr:
    """Exact partial derivative by the symbol `name`.

    Any symbol other than `name` (coordinates and parameters alike) is a
    constant; opaque functions produce formal-derivative nodes by the
    chain rule.
    """
    if isinstance(e, Rat):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == name else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, name) for t in e.terms))
    if isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            d = diff(f, name)
            if d is not ZERO:
                parts.append(mul(d, *fs[:i], *fs[i + 1 :]))
        return add(*parts)
    if isinstance(e, Pow):
        d = diff(e.base, name)
        if d is ZERO:
            return ZERO
        return mul(Rat(e.exp), pow_(e.base, e.exp - 1), d)
    if isinstance(e, Func):
        d = diff(e.arg, name)
        if d is ZERO:
            return ZERO
        u = e.arg
        if e.name == "sin":
            outer = func("cos", u)
        elif e.name == "cos":
            outer = neg(func("sin", u))
        elif e.name == "tan":
            outer = add(ONE, pow_(func("tan", u), 2))
        elif e.name == "exp":
            outer = func("exp", u)
        elif e.name == "ln":
            outer = pow_(u, -1)
        elif e.name == "sqrt":
            outer = mul(Rat(Fraction(1, 2)), pow_(func("sqrt", u), -1))
        else:  # pragma: no cover
            raise ValueError(e.name)
        return mul(outer, d)
    if isinstance(e, OpaqueFunc):
        d = diff(e.arg, name)
        if d is ZERO:
            return ZERO
        return mul(OpaqueFunc(e.name, e.arg, e.order + 1), d)
    raise TypeError(f"not an Expr: {e!r}")  # pragma: no cover


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace symbols by expressions; rebuilds canonically."""
    if isinstance(e, Rat):
        return e
    if isinstance(e, Sym):
        return mapping.get(e.name, e)
    if isinstance(e, Add):
        return add(*(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return pow_(substitute(e.base, mapping), e.exp)
    if isinstance(e, Func):
        return func(e.name, substitute(e.arg, mapping))
    if isinstance(e, OpaqueFunc):
        return OpaqueFunc(e.name, substitute(e.arg, mapping), e.order)
    raise TypeError(f"not an Expr: {e!r}")  # pragma: no cover


def substitute_function(e: Expr, name: str, var: str, profile: Expr) -> Expr:
    """Replace the opaque function `name` by a concrete profile.

    Occurrences name^(k)(arg) become (d^k profile / d var^k) evaluated at
    arg.  Used for numeric cross-checks such as a(t) = t^2.
    """
    if isinstance(e, OpaqueFunc) and e.name == name:
        body = profile
        for _ in range(e.order):
            body = diff(body, var)
        inner = substitute_function(e.arg, name, var, profile)
        return substitute(body, {var: inner})
    if isinstance(e, (Rat, Sym)):
        return e
    if isinstance(e, Add):
        return add(*(substitute_function(t, name, var, profile) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute_function(f, name, var, profile) for f in e.factors))
    if isinstance(e, Pow):
        return pow_(substitute_function(e.base, name, var, profile), e.exp)
    if isinstance(e, Func):
        return func(e.name, substitute_function(e.arg, name, var, profile))
    if isinstance(e, OpaqueFunc):
        return OpaqueFunc(
            e.name, substitute_function(e.arg, name, var, profile), e.order
        )
    raise TypeError(f"not an Expr: {e!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# simplify
# ---------------------------------------------------------------------------


def _mono_factors(mono: Expr) -> list[tuple[Expr, int]]:
    if isinstance(mono, Mul):
        return [_as_base_exp(f) for f in mono.factors if not isinstance(f, Rat)]
    if isinstance(mono, Rat):
        return []
    return [_as_base_exp(mono)]


def _build_mono(factors: list[tuple[Expr, int]]) -> Expr:
    return mul(*(pow_(b, e) for b, e in factors if e != 0)) if factors else ONE


def _pythagorean_pass(e: Add) -> Expr | None:
    """One application of  c*m*sin(u)^2 + c*m*cos(u)^2 -> c*m.

    Coefficients of the same sign are matched up to the smaller magnitude.
    Returns the rewritten sum or None when no pair matches.
    """
    entries = []  # (coeff, factor list, key of monomial)
    index: dict[tuple, int] = {}
    for t in e.terms:
        c, mono = _coeff_monomial(t)
        fs = _mono_factors(mono)
        entries.append([c, fs])
        index[mono.key] = len(entries) - 1

    for i, (c1, fs) in enumerate(entries):
        if c1 == 0:
            continue
        for j, (b, k) in enumerate(fs):
            if not (isinstance(b, Func) and b.name == "sin" and k >= 2):
                continue
            partner = list(fs)
            partner[j] = (b, k - 2)
            partner.append((Func("cos", b.arg), 2))
            partner_mono = _build_mono(partner)
            pi = index.get(partner_mono.key)
            if pi is None or pi == i:
                continue
            c2 = entries[pi][0]
            if c2 == 0 or (c1 > 0) != (c2 > 0):
                continue
            c = c1 if abs(c1) <= abs(c2) else c2
            entries[i][0] = c1 - c
            entries[pi][0] = c2 - c
            reduced = list(fs)
            reduced[j] = (b, k - 2)
            new_terms = [_scale(cc, _build_mono(ffs)) for cc, ffs in entries if cc != 0]
            new_terms.append(_scale(c, _build_mono(reduced)))
            return add(*new_terms)
    return None


def simplify(e: Expr) -> Expr:
    """Canonical form under the documented rewrite set; idempotent."""
    if isinstance(e, (Rat, Sym)):
        return e
    if isinstance(e, Func):
        return func(e.name, simplify(e.arg))
    if isinstance(e, OpaqueFunc):
        return OpaqueFunc(e.name, simplify(e.arg), e.order)
    if isinstance(e, Pow):
        return pow_(simplify(e.base), e.exp)
    if isinstance(e, Mul):
        return mul(*(simplify(f) for f in e.factors))
    if isinstance(e, Add):
        out = add(*(simplify(t) for t in e.terms))
        while isinstance(out, Add):
            rewritten = _pythagorean_pass(out)
            if rewritten is None:
                break
            out = rewritten
        return out
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _pow_token(base: Expr, exp: int) -> str:
    if isinstance(base, Add):
        b = f"({to_text(base)})"
    else:
        b = to_text(base)
    return b if exp == 1 else f"{b}^{exp}"


def _term_text(t: Expr) -> str:
    """Render an Add-free term as numerator/denominator tokens."""
    coeff = Fraction(1)
    num: list[str] = []
    den: list[str] = []
    factors = t.factors if isinstance(t, Mul) else (t,)
    for f in factors:
        if isinstance(f, Rat):
            coeff *= f.value
            continue
        b, e = _as_base_exp(f)
        if e > 0:
            num.append(_pow_token(b, e))
        else:
            den.append(_pow_token(b, -e))
    if coeff.numerator != 1 or not num:
        num.insert(0, str(coeff.numerator))
    if coeff.denominator != 1:
        den.insert(0, str(coeff.denominator))
    out = "*".join(num)
    for d in den:
        out += f"/{d}"
    return out


def to_text(e: Expr) -> str:
    """Printable, reparseable text form.

    Formal derivatives print with primes (a'(t)); the parser accepts the
    same extension, so parse(to_text(e)) == e for canonical trees.
    """
    if isinstance(e, Rat):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, OpaqueFunc):
        primes = "'" * e.order
        return f"{e.name}{primes}({to_text(e.arg)})"
    if isinstance(e, Add):
        pieces = []
        for t in e.terms:
            c, _ = _coeff_monomial(t)
            if c < 0 and pieces:
                pieces.append(f" - {_term_text(_scale(Fraction(-1), t))}")
            elif pieces:
                pieces.append(f" + {_term_text(t)}")
            else:
                sign = "-" if c < 0 else ""
                body = _term_text(_scale(Fraction(-1), t)) if c < 0 else _term_text(t)
                pieces.append(sign + body)
        return "".join(pieces)
    # Mul / Pow: render through the term printer
    c, _ = _coeff_monomial(e)
    if c < 0:
        return "-" + _term_text(_scale(Fraction(-1), e))
    return _term_text(e)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------
#
# Grammar (README carries the same statement):
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := atom ('^' ['-'] integer)? | '-' factor
#   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
# Identifiers: [A-Za-z][A-Za-z0-9_]*, optionally suffixed by primes (')
# when used as a function call -- that extension carries the formal
# derivatives a'(t), f''(u) through printing and reparsing.

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z][A-Za-z0-9_]*'*)|(?P<op>[-+*/^()]))"
)


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExprSyntaxError(
                f"unexpected character {stripped[0]!r}", at,
                expected=("number", "identifier", "operator"),
            )
        if m.group("num") is not None:
            out.append(_Token("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            out.append(_Token("ident", m.group("ident"), m.start("ident")))
        else:
            out.append(_Token(m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    out.append(_Token("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, chart: Chart, params: Iterable[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = set(chart.names)
        self.params = set(params)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExprSyntaxError(
                f"expected {expected[0]}, found {tok.text or 'end of input'}",
                tok.pos,
                expected=expected,
            )
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(
                f"unexpected trailing input {tok.text!r}", tok.pos,
                expected=("'+'", "'-'", "'*'", "'/'", "end of input"),
            )
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take()
            rhs = self.term()
            e = add(e, rhs) if op.kind == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            e = mul(e, rhs) if op.kind == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        if self.peek().kind == "-":
            self.take()
            return neg(self.factor())
        base = self.atom()
        if self.peek().kind == "^":
            self.take()
            sign = 1
            if self.peek().kind == "-":
                self.take()
                sign = -1
            tok = self.expect("num", ("integer exponent",))
            if "." in tok.text:
                raise ExprSyntaxError(
                    "exponent must be an integer", tok.pos,
                    expected=("integer exponent",),
                )
            return pow_(base, sign * int(tok.text))
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return Rat(Fraction(tok.text))
        if tok.kind == "(":
            self.take()
            e = self.expr()
            self.expect(")", ("')'",))
            return e
        if tok.kind == "ident":
            self.take()
            name = tok.text.rstrip("'")
            order = len(tok.text) - len(name)
            if self.peek().kind == "(":
                self.take()
                arg = self.expr()
                self.expect(")", ("')'",))
                if name in BUILTIN_FUNCTIONS:
                    if order:
                        raise ExprSyntaxError(
                            f"primes are not allowed on built-in {name}",
                            tok.pos,
                            expected=("opaque function name",),
                        )
                    return func(name, arg)
                return OpaqueFunc(name, arg, order)
            if order:
                raise ExprSyntaxError(
                    f"derivative {tok.text} must be applied to an argument",
                    tok.pos,
                    expected=("'('",),
                )
            if name in self.coords or name in self.params:
                return Sym(name)
            raise UnknownSymbolError(name, tok.pos)
        raise ExprSyntaxError(
            f"expected an operand, found {tok.text or 'end of input'}",
            tok.pos,
            expected=("number", "identifier", "'('", "'-'"),
        )


def parse_expr(text: str, chart: Chart, params: Iterable[str] = ()) -> Expr:
    """Parse `text` against a chart and parameter list.

    Bare identifiers must be chart coordinates or declared parameters;
    non-built-in identifiers applied with call syntax become opaque
    function symbols.
    """
    return _Parser(text, chart, params).parse()


# ---------------------------------------------------------------------------
# Numeric evaluation
# ---------------------------------------------------------------------------


def fn_key(name: str, order: int) -> str:
    """fn_table key for the order-th formal derivative of `name`."""
    return name + "'" * order


def _eval(e: Expr, env: Mapping[str, float], fns: Mapping[str, Callable[[float], float]],
          guard: float) -> float:
    if isinstance(e, Rat):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnboundSymbolError(f"symbol '{e.name}' is unbound") from None
    if isinstance(e, Add):
        return sum(_eval(t, env, fns, guard) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, env, fns, guard)
        return out
    if isinstance(e, Pow):
        b = _eval(e.base, env, fns, guard)
        if e.exp < 0:
            if b == 0:
                raise DomainError("division by zero")
            if abs(b) < guard:
                raise DomainError("near-singular denominator")
        return b**e.exp
    if isinstance(e, Func):
        x = _eval(e.arg, env, fns, guard)
        if e.name == "sin":
            return math.sin(x)
        if e.name == "cos":
            return math.cos(x)
        if e.name == "tan":
            if abs(math.cos(x)) < guard:
                raise DomainError("tan near a pole")
            return math.tan(x)
        if e.name == "exp":
            try:
                return math.exp(x)
            except OverflowError:
                raise DomainError("exp overflow") from None
        if e.name == "ln":
            if x <= 0:
                raise DomainError("ln of a non-positive value")
            return math.log(x)
        if e.name == "sqrt":
            if x < 0:
                raise DomainError("sqrt of a negative value")
            return math.sqrt(x)
        raise ValueError(e.name)  # pragma: no cover
    if isinstance(e, OpaqueFunc):
        key = fn_key(e.name, e.order)
        fn = fns.get(key)
        if fn is None:
            raise UnboundSymbolError(f"function '{key}' is unbound")
        return float(fn(_eval(e.arg, env, fns, guard)))
    raise TypeError(f"not an Expr: {e!r}")  # pragma: no cover


def eval_at(e: Expr, assignment: Mapping[str, float],
            fn_table: Mapping[str, Callable[[float], float]] | None = None) -> float:
    """Double-precision value of `e` with every symbol and function bound.

    fn_table keys follow `fn_key`: "a" for a, "a'" for its first formal
    derivative, and so on.
    """
    return _eval(e, assignment, fn_table or {}, 0.0)


# ---------------------------------------------------------------------------
# Tri-state zero testing
# ---------------------------------------------------------------------------


class ZeroVerdict(Enum):
    ZERO = "Zero"
    NONZERO = "NonZero"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SamplingPolicy:
    """Deterministic numeric fallback for zero-equivalence.

    `n_points` samples are drawn uniformly from `box` per free symbol with
    a fixed `seed`; evaluations whose denominators fall within
    `singular_guard` (or that leave a function domain) are redrawn, up to
    `max_redraws` in total.  |value| > tol at any point means NONZERO; all
    points within tol means ZERO when `trust_sampling`, else UNKNOWN.
    """

    n_points: int = 20
    seed: int = 0
    box: tuple[float, float] = (-2.0, 2.0)
    tol: float = 1e-9
    trust_sampling: bool = True
    singular_guard: float = 1e-6
    max_redraws: int = 200

    def with_seed(self, seed: int) -> "SamplingPolicy":
        return SamplingPolicy(
            self.n_points, seed, self.box, self.tol,
            self.trust_sampling, self.singular_guard, self.max_redraws,
        )


DEFAULT_POLICY = SamplingPolicy()


class _OpaqueInterp:
    """Smooth random interpretation of an opaque profile: a cubic plus a
    sinusoid, so no formal derivative of any order vanishes identically."""

    def __init__(self, rng: random.Random):
        self.c = [rng.uniform(-1.5, 1.5) for _ in range(4)]
        self.amp = rng.uniform(0.6, 1.4)
        self.freq = rng.uniform(0.7, 1.3)
        self.phase = rng.uniform(0.0, math.pi)

    def derivative(self, order: int) -> Callable[[float], float]:
        c = self.c
        amp, w, ph = self.amp, self.freq, self.phase

        def value(s: float) -> float:
            if order == 0:
                p = c[0] + c[1] * s + c[2] * s * s + c[3] * s**3
            elif order == 1:
                p = c[1] + 2 * c[2] * s + 3 * c[3] * s * s
            elif order == 2:
                p = 2 * c[2] + 6 * c[3] * s
            elif order == 3:
                p = 6 * c[3]
            else:
                p = 0.0
            return p + amp * w**order * math.sin(w * s + ph + order * math.pi / 2)

        return value


def interpretation_table(e: Expr, policy: SamplingPolicy) -> dict[str, Callable[[float], float]]:
    """fn_table for every opaque call in `e`, derived from the policy seed.

    The interpretation of a name depends only on (seed, name), so the same
    profile backs a(t) and a'(t) consistently across expressions.
    """
    table: dict[str, Callable[[float], float]] = {}
    for name, max_order in sorted(opaque_calls(e).items()):
        interp = _OpaqueInterp(random.Random(f"{policy.seed}:{name}"))
        for order in range(max_order + 1):
            table[fn_key(name, order)] = interp.derivative(order)
    return table


def is_zero(e: Expr, policy: SamplingPolicy = DEFAULT_POLICY) -> ZeroVerdict:
    """Tri-state zero test: symbolic first, seeded sampling as fallback."""
    s = simplify(e)
    if isinstance(s, Rat):
        return ZeroVerdict.ZERO if s.value == 0 else ZeroVerdict.NONZERO

    names = sorted(free_symbols(s))
    fns = interpretation_table(s, policy)
    rng = random.Random(policy.seed)
    lo, hi = policy.box
    redraws = 0
    done = 0
    while done < policy.n_points:
        env = {n: rng.uniform(lo, hi) for n in names}
        try:
            v = _eval(s, env, fns, policy.singular_guard)
        except DomainError:
            redraws += 1
            if redraws > policy.max_redraws:
                return ZeroVerdict.UNKNOWN
            continue
        if abs(v) > policy.tol:
            return ZeroVerdict.NONZERO
        done += 1
    return ZeroVerdict.ZERO if policy.trust_sampling else ZeroVerdict.UNKNOWN
