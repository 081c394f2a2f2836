"""Functional commutativity diagnostics and finite decompositions.

A generator is functionally commutative on its interval when
``L(t) L(s) = L(s) L(t)`` for all ``t, s``; for the generators handled here
this is equivalent to ``[L(t), L'(t)] = 0``.  Both conditions are sampled on a
uniform grid and must give the same verdict.
"""

import os
import warnings
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import scalar
from .errors import DecompositionError, NotCommutativeError
from .generator import DEFAULT_DERIVATIVE_STEP, Interval
from .linalg import frob_norm, numerical_rank

DEFAULT_TOL = 1e-9
DEFAULT_GRID = 33
DECOMPOSITION_COMMUTE_TOL = 1e-10
RESIDUAL_TOL = 1e-9


class ConsistencyWarning(UserWarning):
    """The pairwise and derivative diagnostics disagree."""


def default_tol():
    """Global relative tolerance, overridable with ``COMMUPROP_TOL``."""
    raw = os.environ.get("COMMUPROP_TOL")
    if not raw:
        return DEFAULT_TOL
    value = float(raw)
    if not value > 0:
        raise ValueError(f"COMMUPROP_TOL must be positive, got {raw!r}")
    return value


@dataclass(frozen=True)
class CommutativityReport:
    is_commutative: bool
    max_pairwise_commutator_norm: float
    max_derivative_commutator_norm: float
    witness_pair: Tuple[float, float]
    witness_norm: float
    grid: Tuple[float, ...]
    tol: float
    max_relative_pairwise: float
    max_relative_derivative: float
    derivative_verdict: bool
    consistent: bool

    def to_json(self):
        return {
            "commutative": bool(self.is_commutative),
            "max_pairwise": float(self.max_pairwise_commutator_norm),
            "max_derivative": float(self.max_derivative_commutator_norm),
            "witness": [float(self.witness_pair[0]), float(self.witness_pair[1])],
            "grid_size": len(self.grid),
        }


def _norms(stack):
    return np.sqrt(np.sum(np.abs(stack) ** 2, axis=(-2, -1)))


def check_functional_commutativity(g, grid_size=DEFAULT_GRID, tol=None, h=DEFAULT_DERIVATIVE_STEP):
    """Sample ``L`` on a uniform grid and test both commutativity conditions.

    A pair ``(t, s)`` passes when
    ``||[L(t), L(s)]||_F <= tol * (1 + ||L(t)||_F ||L(s)||_F)``; the
    derivative test uses the same form with ``L'(t)`` from central
    differences.  Both tests are applied to ``L / m`` where ``m`` is the
    largest grid norm, so the verdict does not change when every coefficient
    is multiplied by the same nonzero constant.  The witness pair is the one
    with the largest relative violation.  A disagreement between the two verdicts raises a
    :class:`ConsistencyWarning` and is flagged in the report.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    tol = default_tol() if tol is None else tol
    grid = g.interval.grid(grid_size)
    mats = g.evaluate_many(grid)
    norms = _norms(mats)
    scale = float(np.max(norms)) or 1.0

    prod = np.einsum("aij,bjk->abik", mats, mats)
    comm = _norms(prod - prod.transpose(1, 0, 2, 3))
    rel = comm / (scale**2 + np.outer(norms, norms))
    i, j = np.unravel_index(np.argmax(rel), rel.shape)
    if i > j:
        i, j = j, i
    max_rel = float(rel[i, j])
    verdict = max_rel <= tol

    inner = np.clip(grid, g.interval.lo + h, g.interval.hi - h)
    deriv = (g.evaluate_many(inner + h) - g.evaluate_many(inner - h)) / (2.0 * h)
    at = g.evaluate_many(inner)
    dcomm = _norms(at @ deriv - deriv @ at)
    drel = dcomm / (scale**2 + _norms(at) * _norms(deriv))
    max_drel = float(np.max(drel))
    dverdict = max_drel <= tol

    consistent = verdict == dverdict
    if not consistent:
        warnings.warn(
            "pairwise and derivative commutativity tests disagree "
            f"(pairwise {max_rel:.3e}, derivative {max_drel:.3e}, tol {tol:.1e})",
            ConsistencyWarning,
            stacklevel=2,
        )
    return CommutativityReport(
        is_commutative=bool(verdict),
        max_pairwise_commutator_norm=float(np.max(comm)),
        max_derivative_commutator_norm=float(np.max(dcomm)),
        witness_pair=(float(grid[i]), float(grid[j])),
        witness_norm=float(comm[i, j]),
        grid=tuple(float(x) for x in grid),
        tol=tol,
        max_relative_pairwise=max_rel,
        max_relative_derivative=max_drel,
        derivative_verdict=bool(dverdict),
        consistent=consistent,
    )


def _check_mutual_commutation(mats, rel_tol, what):
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            a, b = mats[i], mats[j]
            c = frob_norm(a @ b - b @ a)
            if c > rel_tol * (1.0 + frob_norm(a) * frob_norm(b)):
                raise NotCommutativeError(
                    f"{what} {i} and {j} do not commute (||[., .]||_F = {c:.3e})"
                )


@dataclass(frozen=True)
class SampledDecomposition:
    """``L(t) ~= sum_k coefficients[t, k] * basis[k]`` sampled on ``grid``."""

    basis: Tuple[np.ndarray, ...]
    basis_times: Tuple[float, ...]
    grid: np.ndarray
    coefficients: np.ndarray
    residuals: np.ndarray

    @property
    def size(self):
        return len(self.basis)

    def to_json(self):
        from .linalg import matrix_to_json

        return {
            "basis": [matrix_to_json(b) for b in self.basis],
            "basis_times": [float(x) for x in self.basis_times],
            "grid": [float(x) for x in self.grid],
            "coefficients": [
                [[float(c.real), float(c.imag)] for c in row] for row in self.coefficients
            ],
            "residuals": [float(r) for r in self.residuals],
            "max_residual": float(np.max(self.residuals)) if len(self.residuals) else 0.0,
        }


def martin_decompose(g, grid_size=DEFAULT_GRID, tol=None):
    """Pick commuting basis matrices ``L_k = L(t_k)`` and fit coefficients.

    Sample times are scanned earliest first; ``L(t)`` joins the basis when
    it raises the numerical rank of the (normalized, vectorized) basis.  Every
    grid value is then fitted by least squares.

    Raises
    ------
    NotCommutativeError
        If the chosen basis matrices fail to commute.
    DecompositionError
        If some grid value is not reproduced to ``1e-9 * (1 + ||L(t)||_F)``.
    """
    tol = default_tol() if tol is None else tol
    grid = g.interval.grid(grid_size)
    mats = g.evaluate_many(grid)

    basis, basis_times, columns = [], [], []
    for t, m in zip(grid, mats):
        nrm = frob_norm(m)
        if nrm == 0.0:
            continue
        candidate = columns + [m.reshape(-1) / nrm]
        if numerical_rank(np.column_stack(candidate)) > len(columns):
            columns = candidate
            basis.append(m.copy())
            basis_times.append(float(t))
    if not basis:
        # the zero generator: keep one (zero) matrix so the shape stays usable
        basis.append(np.zeros((g.n, g.n), dtype=np.complex128))
        basis_times.append(float(grid[0]))

    _check_mutual_commutation(basis, tol, "basis matrices")

    design = np.column_stack([b.reshape(-1) for b in basis])
    targets = mats.reshape(len(grid), -1).T
    coeffs, *_ = np.linalg.lstsq(design, targets, rcond=None)
    resid = _norms((design @ coeffs - targets).T.reshape(len(grid), g.n, g.n))
    bound = RESIDUAL_TOL * (1.0 + _norms(mats))
    if np.any(resid > bound):
        k = int(np.argmax(resid / bound))
        raise DecompositionError(
            f"least-squares residual {resid[k]:.3e} at t={grid[k]} exceeds {bound[k]:.3e}"
        )
    return SampledDecomposition(
        basis=tuple(basis),
        basis_times=tuple(basis_times),
        grid=grid,
        coefficients=coeffs.T,
        residuals=resid,
    )


@dataclass(frozen=True)
class DecompositionPart:
    """One proper function ``f(t, G) = sum_k coeffs[k](t) * G**k``.

    ``coeffs[0]`` multiplies the identity, ``coeffs[1]`` multiplies ``G`` and
    so on.
    """

    coeffs: Tuple[scalar.ScalarFn, ...]
    matrix: np.ndarray

    def evaluate(self, t):
        n = self.matrix.shape[0]
        out = np.zeros((n, n), dtype=np.complex128)
        power = np.eye(n, dtype=np.complex128)
        for k, c in enumerate(self.coeffs):
            if k:
                power = power @ self.matrix
            out += scalar.evaluate(c, t) * power
        return out


@dataclass(frozen=True)
class SpatialDecomposition:
    """``L(t) = sum_i f_i(t, G_i)`` with mutually commuting ``G_i``."""

    parts: Tuple[DecompositionPart, ...]
    n: int
    interval: Interval
    validation_residual: float = field(default=0.0)

    def __post_init__(self):
        for p in self.parts:
            if p.matrix.shape != (self.n, self.n):
                raise ValueError(f"part matrix has shape {p.matrix.shape}, expected {self.n}x{self.n}")
        mats = [p.matrix for p in self.parts]
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                a, b = mats[i], mats[j]
                c = frob_norm(a @ b - b @ a)
                if c > DECOMPOSITION_COMMUTE_TOL * frob_norm(a) * frob_norm(b):
                    raise NotCommutativeError(
                        f"decomposition matrices {i} and {j} do not commute (||[G_i, G_j]||_F = {c:.3e})"
                    )

    def evaluate(self, t):
        out = np.zeros((self.n, self.n), dtype=np.complex128)
        for p in self.parts:
            out += p.evaluate(t)
        return out

    def permuted(self, order):
        return SpatialDecomposition(
            tuple(self.parts[i] for i in order), self.n, self.interval, self.validation_residual
        )


def reconstruction_residual(decomposition, g, grid_size=DEFAULT_GRID):
    """Largest ``||sum_i f_i(t, G_i) - L(t)||_F / (1 + ||L(t)||_F)`` on a grid."""
    worst = 0.0
    for t in g.interval.grid(grid_size):
        target = g(t)
        worst = max(worst, frob_norm(decomposition.evaluate(t) - target) / (1.0 + frob_norm(target)))
    return worst


def as_spatial_decomposition(g, grid_size=DEFAULT_GRID):
    """Read each term ``(beta_i, G_i)`` as the primitive function ``beta_i(t) * lambda``.

    Raises
    ------
    NotCommutativeError
        If the term matrices do not mutually commute.
    """
    parts = tuple(
        DecompositionPart((scalar.ZERO, term.coeff), np.array(term.matrix)) for term in g.terms
    )
    d = SpatialDecomposition(parts, g.n, g.interval)
    resid = reconstruction_residual(d, g, grid_size)
    if resid > RESIDUAL_TOL:
        raise DecompositionError(f"reconstruction residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e}")
    return SpatialDecomposition(parts, g.n, g.interval, resid)
