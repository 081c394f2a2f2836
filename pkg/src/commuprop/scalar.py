"""Scalar coefficient functions of time.

A :class:`ScalarFn` is a small expression tree in the variable ``t`` built from
complex constants, sums, products, non-negative integer powers and
``sin``/``cos``/``exp`` of affine arguments ``a*t + b``.  Every such tree is a
finite combination of terms ``c * t**n * exp(a*t)``, which is what makes exact
definite integration possible; adaptive Simpson quadrature is kept as a
fallback and as an independent check.

Text form (see :func:`parse`)::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := ('+' | '-') unary | power
    power  := primary ('^' uint)*
    primary:= number | 't' | 'ti' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp'

Numbers are decimals with an optional exponent and an optional trailing ``i``
marking an imaginary literal (``1i``, ``2.5e-3i``).
"""

import cmath
import math
import re
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ParseError, QuadratureError

SIMPSON_TOL = 1e-12
SIMPSON_MAX_DEPTH = 40
MAX_EXPANSION_TERMS = 512


class ScalarFn:
    """Base class for expression nodes.  Nodes are immutable."""

    def __call__(self, t):
        return evaluate(self, t)

    def __add__(self, other):
        return Add((self, as_scalar_fn(other)))

    def __radd__(self, other):
        return Add((as_scalar_fn(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Const(-1.0), as_scalar_fn(other)))))

    def __rsub__(self, other):
        return Add((as_scalar_fn(other), Mul((Const(-1.0), self))))

    def __mul__(self, other):
        return Mul((self, as_scalar_fn(other)))

    def __rmul__(self, other):
        return Mul((as_scalar_fn(other), self))

    def __neg__(self):
        return Mul((Const(-1.0), self))

    def __pow__(self, k):
        return Pow(self, k)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Const(ScalarFn):
    value: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        if not cmath.isfinite(self.value):
            raise ValueError("constant must be finite")


@dataclass(frozen=True, eq=True)
class Var(ScalarFn):
    pass


@dataclass(frozen=True, eq=True)
class Add(ScalarFn):
    terms: Tuple[ScalarFn, ...]


@dataclass(frozen=True, eq=True)
class Mul(ScalarFn):
    factors: Tuple[ScalarFn, ...]


@dataclass(frozen=True, eq=True)
class Pow(ScalarFn):
    base: ScalarFn
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, (int, np.integer)) or self.exponent < 0:
            raise ValueError("exponent must be a non-negative integer")


@dataclass(frozen=True, eq=True)
class _Affine(ScalarFn):
    a: complex = 1.0
    b: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))


class Sin(_Affine):
    """``sin(a*t + b)``"""


class Cos(_Affine):
    """``cos(a*t + b)``"""


class Exp(_Affine):
    """``exp(a*t + b)``"""


def as_scalar_fn(x):
    """Coerce a number, expression string or :class:`ScalarFn` to a ScalarFn."""
    if isinstance(x, ScalarFn):
        return x
    if isinstance(x, str):
        return parse(x)
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot interpret {x!r} as a scalar function")


# -- evaluation ---------------------------------------------------------------


def _ev(node, t):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Add):
        total = 0.0
        for term in node.terms:
            total = total + _ev(term, t)
        return total
    if isinstance(node, Mul):
        prod = 1.0
        for factor in node.factors:
            prod = prod * _ev(factor, t)
        return prod
    if isinstance(node, Pow):
        return _ev(node.base, t) ** node.exponent
    if isinstance(node, Sin):
        return np.sin(node.a * t + node.b)
    if isinstance(node, Cos):
        return np.cos(node.a * t + node.b)
    if isinstance(node, Exp):
        return np.exp(node.a * t + node.b)
    raise TypeError(f"unknown node {node!r}")


def evaluate(f, t):
    """Value of ``f`` at ``t``.

    ``t`` may be a float or a numpy array; arrays give a complex array of the
    same shape.
    """
    if np.ndim(t) == 0:
        return complex(_ev(f, float(t)))
    arr = np.asarray(t, dtype=float)
    return np.broadcast_to(np.asarray(_ev(f, arr), dtype=np.complex128), arr.shape).copy()


# -- exact integration ----------------------------------------------------------


class _TooLarge(Exception):
    pass


def _merge(acc, key, coeff):
    acc[key] = acc.get(key, 0.0) + coeff


def _product(p, q):
    out = {}
    for (n1, a1), c1 in p.items():
        for (n2, a2), c2 in q.items():
            _merge(out, (n1 + n2, a1 + a2), c1 * c2)
    if len(out) > MAX_EXPANSION_TERMS:
        raise _TooLarge
    return out


def expand(f):
    """Rewrite ``f`` as ``{(n, a): c}`` meaning ``sum c * t**n * exp(a*t)``.

    Raises ``_TooLarge`` internally when the expansion would exceed
    ``MAX_EXPANSION_TERMS`` terms.
    """
    if isinstance(f, Const):
        return {(0, 0j): f.value}
    if isinstance(f, Var):
        return {(1, 0j): 1.0 + 0j}
    if isinstance(f, Add):
        out = {}
        for term in f.terms:
            for key, c in expand(term).items():
                _merge(out, key, c)
        return out
    if isinstance(f, Mul):
        out = {(0, 0j): 1.0 + 0j}
        for factor in f.factors:
            out = _product(out, expand(factor))
        return out
    if isinstance(f, Pow):
        base = expand(f.base)
        out = {(0, 0j): 1.0 + 0j}
        for _ in range(f.exponent):
            out = _product(out, base)
        return out
    if isinstance(f, Exp):
        return {(0, f.a): cmath.exp(f.b)}
    if isinstance(f, Sin):
        ia = 1j * f.a
        out = {(0, ia): cmath.exp(1j * f.b) / 2j}
        _merge(out, (0, -ia), -cmath.exp(-1j * f.b) / 2j)
        return out
    if isinstance(f, Cos):
        ia = 1j * f.a
        out = {(0, ia): cmath.exp(1j * f.b) / 2}
        _merge(out, (0, -ia), cmath.exp(-1j * f.b) / 2)
        return out
    raise TypeError(f"unknown node {f!r}")


def _monomial_exp_integral(n, a, t):
    """``int_0^t s**n exp(a*s) ds`` for a single endpoint."""
    if t == 0.0:
        return 0j
    if a == 0:
        return t ** (n + 1) / (n + 1) + 0j
    at = abs(a * t)
    if at < max(1.0, n + 1.0):
        # power series; the closed form cancels badly in this regime
        total = 0j
        term = t ** (n + 1) + 0j
        j = 0
        while True:
            contrib = term / (n + j + 1)
            total += contrib
            j += 1
            term = term * a * t / j
            if abs(contrib) <= 1e-17 * abs(total) and j > 2:
                break
            if j > 400:
                break
        return total

    def closed(x):
        acc = 0j
        falling = 1.0
        for k in range(n + 1):
            acc += (-1) ** k * falling * x ** (n - k) / a ** (k + 1)
            falling *= n - k
        return acc

    return cmath.exp(a * t) * closed(t) - closed(0.0)


def integrate_exact(f, lo, hi):
    """Definite integral from the closed-form antiderivative.

    Returns ``None`` when the expanded form is too large to be worth it.
    """
    try:
        terms = expand(f)
    except _TooLarge:
        return None
    total = 0j
    for (n, a), c in terms.items():
        if c == 0:
            continue
        total += c * (_monomial_exp_integral(n, a, hi) - _monomial_exp_integral(n, a, lo))
    return complex(total)


# -- adaptive Simpson -------------------------------------------------------------


def _size(x):
    return float(np.linalg.norm(x)) if np.ndim(x) else abs(x)


def adaptive_simpson(func, lo, hi, tol=SIMPSON_TOL, max_depth=SIMPSON_MAX_DEPTH, panels=8):
    """Adaptive Simpson quadrature of a scalar- or array-valued function.

    The interval is first cut into ``panels`` equal pieces, each refined
    recursively until the Richardson error estimate is below its share of
    ``tol`` (absolute, measured in the Frobenius/absolute-value norm).

    Raises
    ------
    QuadratureError
        If a sub-interval is still unresolved after ``max_depth`` bisections.
    """
    if lo == hi:
        return 0.0 * func(lo)

    def recurse(a, b, fa, fm, fb, whole, tol_, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = func(lm)
        frm = func(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        err = _size(delta)
        floor = 8.0 * np.finfo(float).eps * _size(left + right)
        if err <= 15.0 * tol_ or err <= floor:
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a}, {b}] (error estimate {err:.3e})"
            )
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol_, depth - 1) + recurse(
            m, b, fm, frm, fb, right, 0.5 * tol_, depth - 1
        )

    edges = np.linspace(lo, hi, panels + 1)
    total = None
    for a, b in zip(edges[:-1], edges[1:]):
        a, b = float(a), float(b)
        fa, fb = func(a), func(b)
        fm = func(0.5 * (a + b))
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        piece = recurse(a, b, fa, fm, fb, whole, tol / panels, max_depth)
        total = piece if total is None else total + piece
    return total


def integrate(f, lo, hi, method="auto", tol=SIMPSON_TOL):
    """Definite integral of ``f`` over ``[lo, hi]``.

    ``method`` is ``"auto"`` (closed form, quadrature only when the closed
    form would be too large), ``"exact"`` or ``"quadrature"``.
    """
    f = as_scalar_fn(f)
    lo, hi = float(lo), float(hi)
    if method in ("auto", "exact"):
        value = integrate_exact(f, lo, hi)
        if value is not None:
            return value
        if method == "exact":
            raise ValueError("expression too large for exact integration")
    elif method != "quadrature":
        raise ValueError(f"unknown integration method {method!r}")
    return complex(adaptive_simpson(lambda s: evaluate(f, s), lo, hi, tol=tol))


# -- printing ---------------------------------------------------------------------


def _num(x):
    return repr(float(x))


def _complex_text(z):
    z = complex(z)
    if z.imag == 0.0:
        s = _num(z.real)
        return f"({s})" if s.startswith("-") else s
    if z.real == 0.0:
        s = _num(z.imag) + "i"
        return f"({s})" if s.startswith("-") else s
    im = _num(abs(z.imag))
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"({_num(z.real)}{sign}{im}i)"


def to_text(f):
    """Render ``f`` in the text grammar; ``parse(to_text(f))`` reproduces it."""
    if isinstance(f, Const):
        return _complex_text(f.value)
    if isinstance(f, Var):
        return "t"
    if isinstance(f, Add):
        if not f.terms:
            return "0.0"
        return "(" + " + ".join(to_text(x) for x in f.terms) + ")"
    if isinstance(f, Mul):
        if not f.factors:
            return "1.0"
        return "(" + " * ".join(to_text(x) for x in f.factors) + ")"
    if isinstance(f, Pow):
        return f"({to_text(f.base)})^{int(f.exponent)}"
    for cls, name in ((Sin, "sin"), (Cos, "cos"), (Exp, "exp")):
        if isinstance(f, cls):
            return f"{name}({_complex_text(f.a)}*t + {_complex_text(f.b)})"
    raise TypeError(f"unknown node {f!r}")


# -- parsing ----------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*^()]))"
)
_FUNCS = {"sin": Sin, "cos": Cos, "exp": Exp}


def _tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos:].lstrip()[:1]!r}", len(src) - len(src[pos:].lstrip()))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def expr(self):
        terms = [self.term()]
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            terms.append(rhs if op == "+" else Mul((Const(-1.0), rhs)))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self):
        factors = [self.unary()]
        while self.peek()[:2] == ("op", "*"):
            self.take()
            factors.append(self.unary())
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            inner = self.unary()
            return inner if op == "+" else Mul((Const(-1.0), inner))
        return self.power()

    def power(self):
        node = self.primary()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ParseError("exponent must be a non-negative integer literal", pos)
            node = Pow(node, int(text))
        return node

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            if text.endswith("i"):
                return Const(complex(0.0, float(text[:-1])))
            return Const(float(text))
        if kind == "name":
            if text == "t":
                return Var()
            if text == "ti":
                return Mul((Const(1j), Var()))
            if text not in _FUNCS:
                raise ParseError(f"unsupported function or name {text!r}", pos)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            a, b = _affine_parts(arg, text, pos)
            return _FUNCS[text](a, b)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected token {text or 'end of input'!r}", pos)


def _affine_parts(arg, name, pos):
    try:
        terms = expand(arg)
    except _TooLarge:
        terms = None
    if terms is None or any(
        c != 0 and (a != 0 or n > 1) for (n, a), c in terms.items()
    ):
        raise ParseError(f"argument of {name} must be affine in t", pos)
    return terms.get((1, 0j), 0j), terms.get((0, 0j), 0j)


def parse(src):
    """Parse a coefficient expression such as ``"0.5*sin(2*t) + 1i*t"``.

    Raises
    ------
    ParseError
        On syntax errors, unknown names or non-affine function arguments; the
        exception carries the character position.
    """
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    p = _Parser(src)
    node = p.expr()
    kind, text, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing input {text!r}", pos)
    return node


ZERO = Const(0.0)
ONE = Const(1.0)
