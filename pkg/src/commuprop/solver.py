"""Fundamental solutions of ``dPhi/dt = L(t) Phi`` with ``Phi(0) = I``.

Three routes are provided:

* ``exact``: ``exp(int_0^t L)``; valid only for functionally commutative
  generators, so it demands a passing :class:`CommutativityReport`.
* ``zhu``: the product of ``exp(int_0^t f_i(s, G_i) ds)`` over the parts of a
  spatial decomposition.
* ``rk4``: classical fixed-step Runge-Kutta, valid for any generator and used
  as the reference.

``magnus2_term`` gives the second Magnus term, which vanishes for
commutative generators and therefore serves as a diagnostic.
"""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import scalar
from .commutativity import CommutativityReport, SpatialDecomposition
from .errors import DimensionError, NotCommutativeError
from .generator import GeneratorSum, eval_generator, integrate_generator
from .linalg import matrix_exp, matrix_to_json

RK4_STEPS_PER_UNIT = 10_000
METHODS = ("exact", "zhu", "rk4")


def _require_verified(report):
    if not isinstance(report, CommutativityReport):
        raise NotCommutativeError(
            "exp(int L) needs a CommutativityReport; run check_functional_commutativity first"
        )
    if not report.is_commutative:
        raise NotCommutativeError(
            "generator is not functionally commutative "
            f"(witness {report.witness_pair}, ||[L(t), L(s)]||_F = {report.witness_norm:.3e}); "
            "use the rk4 method instead"
        )


def propagate_exact(g, t, report):
    """``matrix_exp(int_0^t L)``.

    Raises
    ------
    NotCommutativeError
        Unless ``report`` is a passing commutativity report.
    """
    _require_verified(report)
    return matrix_exp(integrate_generator(g, t))


def zhu_factor(part, t):
    """``exp(int_0^t f(s, G) ds)`` for one decomposition part."""
    n = part.matrix.shape[0]
    exponent = np.zeros((n, n), dtype=np.complex128)
    power = np.eye(n, dtype=np.complex128)
    for k, c in enumerate(part.coeffs):
        if k:
            power = power @ part.matrix
        weight = scalar.integrate(c, 0.0, t)
        if weight != 0:
            exponent += weight * power
    return matrix_exp(exponent)


def propagate_zhu(d, t):
    """Product of the per-part exponentials, taken in part order."""
    d.interval.check(t)
    out = np.eye(d.n, dtype=np.complex128)
    for part in d.parts:
        out = out @ zhu_factor(part, t)
    return out


def _rk4_segment(g, phi, t0, t1, steps):
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = (t1 - t0) / steps
    nodes = t0 + 0.5 * h * np.arange(2 * steps + 1)
    nodes[-1] = t1
    mats = g.evaluate_many(nodes)
    for k in range(steps):
        a, m, b = mats[2 * k], mats[2 * k + 1], mats[2 * k + 2]
        k1 = a @ phi
        k2 = m @ (phi + 0.5 * h * k1)
        k3 = m @ (phi + 0.5 * h * k2)
        k4 = b @ (phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return phi


def default_rk4_steps(span, per_unit=RK4_STEPS_PER_UNIT):
    return max(1, int(math.ceil(per_unit * abs(span) - 1e-9)))


def propagate_rk4(g, t, steps=None):
    """Integrate ``Phi' = L(t) Phi`` from 0 to ``t`` with ``steps`` RK4 steps.

    ``steps`` defaults to ``10**4`` per unit of time.
    """
    g.interval.check(t)
    phi = np.eye(g.n, dtype=np.complex128)
    if t == 0.0:
        return phi
    steps = default_rk4_steps(t) if steps is None else int(steps)
    return _rk4_segment(g, phi, 0.0, float(t), steps)


def magnus2_term(g, t, tol=1e-11):
    """Second Magnus term ``-1/2 int_0^t [int_0^{t1} L, L(t1)] dt1``.

    The outer integral is adaptive Simpson on the matrix integrand; the
    inner one is the term-wise integral of the generator.
    """
    g.interval.check(t)

    def integrand(t1):
        inner = integrate_generator(g, t1)
        outer = eval_generator(g, t1)
        return inner @ outer - outer @ inner

    return -0.5 * scalar.adaptive_simpson(integrand, 0.0, float(t), tol=tol)


class Propagator:
    """Callable ``t -> Phi(t)`` with a per-time cache.

    Build one with :meth:`exact`, :meth:`zhu` or :meth:`rk4`.  The cache is a
    plain dict filled with ``setdefault``, so concurrent evaluations at the
    same time keep whichever result landed first.
    """

    def __init__(self, method, source, n, interval, report=None, steps_per_unit=RK4_STEPS_PER_UNIT):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        self.method = method
        self.source = source
        self.n = n
        self.interval = interval
        self.report = report
        self.steps_per_unit = steps_per_unit
        self._cache: Dict[float, np.ndarray] = {}

    @classmethod
    def exact(cls, g, report):
        _require_verified(report)
        return cls("exact", g, g.n, g.interval, report=report)

    @classmethod
    def zhu(cls, d):
        return cls("zhu", d, d.n, d.interval)

    @classmethod
    def rk4(cls, g, steps_per_unit=RK4_STEPS_PER_UNIT):
        return cls("rk4", g, g.n, g.interval, steps_per_unit=steps_per_unit)

    def __repr__(self):
        return f"Propagator(method={self.method!r}, n={self.n})"

    def _compute(self, t):
        if self.method == "exact":
            return propagate_exact(self.source, t, self.report)
        if self.method == "zhu":
            return propagate_zhu(self.source, t)
        return propagate_rk4(self.source, t, default_rk4_steps(t, self.steps_per_unit))

    def __call__(self, t):
        t = float(t)
        hit = self._cache.get(t)
        if hit is None:
            value = self._compute(t)
            value.setflags(write=False)
            hit = self._cache.setdefault(t, value)
        return hit


@dataclass
class Trajectory:
    """Samples ``(t_k, X_k)`` of a propagator (``kind="propagator"``) or a
    state (``kind="state"``).  ``extra`` holds optional per-time scalar
    columns appended to the CSV export."""

    times: np.ndarray
    values: np.ndarray
    kind: str = "propagator"
    extra: Dict[str, np.ndarray] = field(default_factory=dict)
    method: Optional[str] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 3 or len(self.values) != len(self.times):
            raise DimensionError("values must be a stack of matrices, one per time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.values))

    def csv_header(self):
        rows, cols = self.values.shape[1:]
        idx = [(i, j) for i in range(rows) for j in range(cols)]
        return (
            ["t"]
            + [f"re_{i}_{j}" for i, j in idx]
            + [f"im_{i}_{j}" for i, j in idx]
            + list(self.extra)
        )

    def to_csv(self, path=None):
        """Write (or return, when ``path`` is None) the CSV text.

        Entries are row-major, real parts then imaginary parts, formatted with
        17 significant digits.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.csv_header())
        for k, (t, m) in enumerate(self):
            flat = m.reshape(-1)
            row = [t] + list(flat.real) + list(flat.imag) + [v[k] for v in self.extra.values()]
            writer.writerow([format(float(x), ".17g") for x in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def to_json(self):
        out = {
            "kind": self.kind,
            "method": self.method,
            "times": [float(t) for t in self.times],
            "values": [matrix_to_json(m) for m in self.values],
        }
        if self.extra:
            out["extra"] = {k: [float(x) for x in v] for k, v in self.extra.items()}
        return out


def _check_times(times, interval):
    times = [float(x) for x in times]
    if not times:
        raise ValueError("need at least one time")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    for t in times:
        interval.check(t)
    return times


def trajectory(p, times, parallel=False):
    """Evaluate a :class:`Propagator` at ascending ``times``.

    The rk4 route integrates segment by segment from one sample to the next
    (starting at 0) instead of restarting from the origin each time.
    """
    times = _check_times(times, p.interval)
    if p.method == "rk4":
        values = _rk4_march(p, times)
    elif parallel:
        with ThreadPoolExecutor() as pool:
            values = list(pool.map(p, times))
    else:
        values = [p(t) for t in times]
    return Trajectory(np.array(times), np.stack(values), "propagator", method=p.method)


def _rk4_march(p, times):
    g: GeneratorSum = p.source
    out = {}
    eye = np.eye(g.n, dtype=np.complex128)
    for side in ([t for t in times if t >= 0.0], sorted((t for t in times if t < 0.0), reverse=True)):
        phi, here = eye, 0.0
        for t in side:
            if t != here:
                phi = _rk4_segment(g, phi, here, t, default_rk4_steps(t - here, p.steps_per_unit))
                here = t
            out[t] = phi
    return [out[t] for t in times]
