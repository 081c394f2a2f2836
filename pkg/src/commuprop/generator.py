"""Time-dependent generators ``L(t) = sum_k beta_k(t) * M_k``."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import scalar
from .errors import DimensionError, IntervalError
from .linalg import as_matrix, matrix_from_json, matrix_to_json

DEFAULT_DERIVATIVE_STEP = 1e-5


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo < self.hi:
            raise IntervalError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.lo <= 0.0 <= self.hi:
            raise IntervalError(f"interval [{self.lo}, {self.hi}] must contain 0")

    def __contains__(self, t):
        return self.lo <= t <= self.hi

    def check(self, t):
        if t not in self:
            raise IntervalError(f"t={t} lies outside [{self.lo}, {self.hi}]")

    def grid(self, size):
        return np.linspace(self.lo, self.hi, size)


@dataclass(frozen=True)
class Term:
    coeff: scalar.ScalarFn
    matrix: np.ndarray


class GeneratorSum:
    """A finite sum of scalar coefficients times constant square matrices.

    Terms are kept exactly as given: no merging, no reordering.  The
    matrices need not commute; that is a property checked elsewhere.

    Parameters
    ----------
    terms : iterable of (coefficient, matrix)
        Coefficients may be :class:`~commuprop.scalar.ScalarFn` objects,
        expression strings or numbers.
    interval : (lo, hi) or Interval
        Working interval; must contain 0.
    """

    def __init__(self, terms, interval=(-1.0, 1.0)):
        built = []
        for coeff, mat in terms:
            m = as_matrix(mat)
            m.setflags(write=False)
            built.append(Term(scalar.as_scalar_fn(coeff), m))
        if not built:
            raise ValueError("a generator needs at least one term")
        n = built[0].matrix.shape[0]
        for term in built:
            if term.matrix.shape != (n, n):
                raise DimensionError(
                    f"all term matrices must be {n}x{n}, got {term.matrix.shape}"
                )
        self.terms: Tuple[Term, ...] = tuple(built)
        self.n = n
        self.interval = interval if isinstance(interval, Interval) else Interval(*interval)

    def __repr__(self):
        return f"GeneratorSum(n={self.n}, terms={len(self.terms)}, interval=[{self.interval.lo}, {self.interval.hi}])"

    def __call__(self, t):
        return eval_generator(self, t)

    def __add__(self, other):
        if not isinstance(other, GeneratorSum):
            return NotImplemented
        lo = max(self.interval.lo, other.interval.lo)
        hi = min(self.interval.hi, other.interval.hi)
        return GeneratorSum(
            [(x.coeff, x.matrix) for x in self.terms + other.terms], (lo, hi)
        )

    @property
    def matrices(self):
        return [term.matrix for term in self.terms]

    def with_interval(self, interval):
        return GeneratorSum([(x.coeff, x.matrix) for x in self.terms], interval)

    def coefficients(self, times):
        """Coefficient table of shape ``(len(times), n_terms)``, no interval check."""
        times = np.asarray(times, dtype=float)
        return np.stack([scalar.evaluate(x.coeff, times) for x in self.terms], axis=-1)

    def evaluate_many(self, times):
        """``L(t)`` for every entry of ``times`` as an array ``(len, n, n)``."""
        coeffs = self.coefficients(times)
        mats = np.stack(self.matrices)
        return np.einsum("tk,kij->tij", coeffs, mats)


def eval_generator(g, t):
    g.interval.check(t)
    out = np.zeros((g.n, g.n), dtype=np.complex128)
    for term in g.terms:
        out += scalar.evaluate(term.coeff, t) * term.matrix
    return out


def integrate_generator(g, t, lo=0.0):
    """``int_lo^t L(s) ds``, integrated term by term."""
    g.interval.check(t)
    g.interval.check(lo)
    out = np.zeros((g.n, g.n), dtype=np.complex128)
    for term in g.terms:
        out += scalar.integrate(term.coeff, lo, t) * term.matrix
    return out


def derivative_generator(g, t, h=DEFAULT_DERIVATIVE_STEP):
    """Central difference ``(L(t+h) - L(t-h)) / (2h)``."""
    if t - h not in g.interval or t + h not in g.interval:
        raise IntervalError(
            f"[{t - h}, {t + h}] is not inside [{g.interval.lo}, {g.interval.hi}]"
        )
    return (eval_generator(g, t + h) - eval_generator(g, t - h)) / (2.0 * h)


def generator_to_json(g):
    return {
        "n": g.n,
        "interval": [g.interval.lo, g.interval.hi],
        "terms": [
            {"coeff": scalar.to_text(x.coeff), "matrix": matrix_to_json(x.matrix)}
            for x in g.terms
        ],
    }


def generator_from_json(obj):
    try:
        n = int(obj["n"])
        lo, hi = obj["interval"]
        raw_terms = obj["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed generator JSON: {exc}") from None
    terms = []
    for item in raw_terms:
        coeff = item["coeff"]
        coeff = scalar.parse(coeff) if isinstance(coeff, str) else scalar.as_scalar_fn(coeff)
        terms.append((coeff, matrix_from_json(item["matrix"])))
    g = GeneratorSum(terms, (lo, hi))
    if g.n != n:
        raise DimensionError(f"generator declares n={n} but matrices are {g.n}x{g.n}")
    return g
