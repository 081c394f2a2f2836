"""Master-equation front-end: superoperators, states and two-level models.

Superoperators act on column-stacked density matrices, so an operator
``rho -> A rho B`` has matrix ``kron(B.T, A)``.

The Pauli matrices follow the convention ``sigma_2 = [[0, i], [-i, 0]]``
(the sign-flipped form).  The ladder operators are fixed independently of
that sign: ``SIGMA_PLUS = sqrt(2) |0><1|`` is upper triangular, which is
``(sigma_1 - i sigma_2) / sqrt(2)`` in this convention.  This is the choice
under which the two-level decay model below has its usual matrix form.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import scalar
from .commutativity import SpatialDecomposition, as_spatial_decomposition
from .errors import DimensionError, NotHermitianError, UnphysicalStateError
from .generator import GeneratorSum
from .linalg import (
    HERMITIAN_ATOL,
    _square,
    as_matrix,
    frob_norm,
    hermitian_defect,
    hermitian_eigenvalues,
    unvec,
    vec,
)
from .solver import Trajectory, _check_times, trajectory

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_2 = np.array([[0, 1j], [-1j, 0]], dtype=np.complex128)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMA_PLUS = (SIGMA_1 - 1j * SIGMA_2) / math.sqrt(2.0)
SIGMA_MINUS = (SIGMA_1 + 1j * SIGMA_2) / math.sqrt(2.0)
for _m in (SIGMA_1, SIGMA_2, SIGMA_3, SIGMA_PLUS, SIGMA_MINUS):
    _m.setflags(write=False)

TRACE_TOL = 1e-10
PSD_TOL = 1e-9
DEFAULT_INTERVAL = (-1.0, 25.0)


def diag(*values):
    return np.diag(np.array(values, dtype=np.complex128))


def adiag(*values):
    """Anti-diagonal matrix: ``values[0]`` top-right down to ``values[-1]`` bottom-left."""
    return np.fliplr(diag(*values))


# -- superoperator builders -----------------------------------------------------


def conjugation_channel(u):
    """Matrix of ``rho -> U rho U^dagger - rho``: ``conj(U) (x) U - I``."""
    u = _square(u, "u")
    n = u.shape[0]
    return np.kron(u.conj(), u) - np.eye(n * n, dtype=np.complex128)


def hamiltonian_part(h, hbar=1.0):
    """Matrix of ``rho -> -(i/hbar) [H, rho]``.

    Raises
    ------
    NotHermitianError
        If ``h`` is not Hermitian to within 1e-10 (Frobenius).
    """
    h = _square(h, "h")
    if hermitian_defect(h) > HERMITIAN_ATOL:
        raise NotHermitianError("Hamiltonian must be Hermitian")
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    eye = np.eye(h.shape[0], dtype=np.complex128)
    return -(1j / hbar) * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator(a):
    """Matrix of ``rho -> A rho A^dagger - 1/2 {A^dagger A, rho}``."""
    a = _square(a, "a")
    eye = np.eye(a.shape[0], dtype=np.complex128)
    ada = a.conj().T @ a
    return np.kron(a.conj(), a) - 0.5 * np.kron(eye, ada) - 0.5 * np.kron(ada.T, eye)


def bilinear_term(f_a, f_b):
    """Matrix of ``rho -> 1/2 ([F_a, rho F_b] + [F_a rho, F_b])``.

    Expanded, the map is ``F_a rho F_b - 1/2 (F_b F_a rho + rho F_b F_a)``.
    """
    f_a = _square(f_a, "f_a")
    f_b = _square(f_b, "f_b")
    if f_a.shape != f_b.shape:
        raise DimensionError(f"shape mismatch {f_a.shape} vs {f_b.shape}")
    eye = np.eye(f_a.shape[0], dtype=np.complex128)
    ba = f_b @ f_a
    return np.kron(f_b.T, f_a) - 0.5 * np.kron(eye, ba) - 0.5 * np.kron(ba.T, eye)


def apply_superoperator(s, rho):
    rho = _square(rho, "rho")
    return unvec(np.asarray(s) @ vec(rho), rho.shape[0])


# -- states ---------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalityReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float

    @property
    def is_physical(self):
        return (
            self.hermiticity_defect <= HERMITIAN_ATOL
            and self.trace_defect <= TRACE_TOL
            and self.min_eigenvalue >= -PSD_TOL
        )


def physicality_check(rho):
    """Hermiticity defect, ``|tr rho - 1|`` and smallest eigenvalue.

    The eigenvalue is that of the Hermitian part, so the report is defined
    even for non-Hermitian input.
    """
    rho = _square(rho, "rho")
    herm = 0.5 * (rho + rho.conj().T)
    return PhysicalityReport(
        hermiticity_defect=hermitian_defect(rho),
        trace_defect=abs(np.trace(rho) - 1.0),
        min_eigenvalue=float(hermitian_eigenvalues(herm)[0]),
    )


def density_matrix(rho):
    """Validate and return ``rho`` as a density matrix.

    Raises
    ------
    UnphysicalStateError
        If ``rho`` is not Hermitian, not of unit trace or not positive
        semidefinite within the module tolerances.
    """
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError("density matrix must be square")
    rep = physicality_check(rho)
    if rep.hermiticity_defect > HERMITIAN_ATOL:
        raise UnphysicalStateError(f"state is not Hermitian (defect {rep.hermiticity_defect:.3e})")
    if rep.trace_defect > TRACE_TOL:
        raise UnphysicalStateError(f"state trace differs from 1 by {rep.trace_defect:.3e}")
    if rep.min_eigenvalue < -PSD_TOL:
        raise UnphysicalStateError(f"state has negative eigenvalue {rep.min_eigenvalue:.3e}")
    return rho


def evolve_state(p, rho0, times, allow_unphysical=False, trace_tol=1e-9):
    """``rho(t) = unvec(Phi(t) vec(rho0))`` along ``times``.

    Each state is checked; the trajectory carries ``min_eig``,
    ``trace_defect`` and ``hermiticity_defect`` columns.

    Raises
    ------
    UnphysicalStateError
        For the first time at which the state leaves the physical set
        (unless ``allow_unphysical``).
    """
    rho0 = density_matrix(rho0)
    n = rho0.shape[0]
    if p.n != n * n:
        raise DimensionError(f"propagator acts on dimension {p.n}, state needs {n * n}")
    times = _check_times(times, p.interval)
    phis = trajectory(p, times).values
    states, mins, traces, herms = [], [], [], []
    v0 = vec(rho0)
    for t, phi in zip(times, phis):
        rho = unvec(phi @ v0, n)
        rep = physicality_check(rho)
        if not allow_unphysical:
            if rep.trace_defect > trace_tol:
                raise UnphysicalStateError(f"trace defect {rep.trace_defect:.3e} at t={t}", t)
            if rep.min_eigenvalue < -PSD_TOL:
                raise UnphysicalStateError(f"negative eigenvalue {rep.min_eigenvalue:.3e} at t={t}", t)
            if rep.hermiticity_defect > 1e-8:
                raise UnphysicalStateError(f"hermiticity defect {rep.hermiticity_defect:.3e} at t={t}", t)
        states.append(rho)
        mins.append(rep.min_eigenvalue)
        traces.append(rep.trace_defect)
        herms.append(rep.hermiticity_defect)
    return Trajectory(
        np.array(times),
        np.stack(states),
        "state",
        extra={
            "min_eig": np.array(mins),
            "trace_defect": np.array(traces),
            "hermiticity_defect": np.array(herms),
        },
        method=p.method,
    )


# -- worked two-level models --------------------------------------------------------


@dataclass
class QuantumProblem:
    """A named master equation with its generator in superoperator form.

    ``decomposition`` is the hand-derived spatial decomposition when there
    is one; ``analytic`` maps ``t`` to the closed-form fundamental solution.
    """

    name: str
    generator: GeneratorSum
    params: dict = field(default_factory=dict)
    decomposition: Optional[SpatialDecomposition] = None
    analytic: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        n = int(round(math.sqrt(self.generator.n)))
        if n * n != self.generator.n:
            raise DimensionError(f"generator dimension {self.generator.n} is not a perfect square")
        self.system_dim = n


G1_EX1 = adiag(1, 0, 0, 1)
G2_EX1 = adiag(0, 1, 1, 0)
G3_EX1 = np.eye(4, dtype=np.complex128)
G4_EX1 = diag(0, 1, 1, 0)
P14 = diag(1, 0, 0, 1)


def example1(gamma=1.0, a1=1.0, a2=1.0, a3=1.0, interval=DEFAULT_INTERVAL):
    """Random-unitary qubit dephasing ``gamma * sum_k a_k(t) (s_k rho s_k^* - rho)``.

    The generator is stored as the four commuting terms

    ==========================  ============================
    matrix                      coefficient
    ==========================  ============================
    ``adiag(1, 0, 0, 1)``       ``gamma * (a1 + a2)``
    ``adiag(0, 1, 1, 0)``       ``gamma * (a1 - a2)``
    ``I``                       ``-gamma * (a1 + a2)``
    ``diag(0, 1, 1, 0)``        ``-2 * gamma * a3``
    ==========================  ============================
    """
    gamma = complex(gamma)
    a1, a2, a3 = (scalar.as_scalar_fn(a) for a in (a1, a2, a3))
    g = scalar.Const(gamma)
    terms = [
        (g * (a1 + a2), G1_EX1),
        (g * (a1 - a2), G2_EX1),
        (scalar.Const(-gamma) * (a1 + a2), G3_EX1),
        (scalar.Const(-2.0 * gamma) * a3, G4_EX1),
    ]
    gen = GeneratorSum(terms, interval)

    def analytic(t):
        A1, A2, A3 = (scalar.integrate(a, 0.0, t) for a in (a1, a2, a3))
        e12 = np.exp(-2 * gamma * (A1 + A2))
        e1 = np.exp(-2 * gamma * A1)
        e2 = np.exp(-2 * gamma * A2)
        e3 = np.exp(-2 * gamma * A3)
        return 0.5 * (
            (1 + e12) * P14
            + (1 - e12) * G1_EX1
            + (e2 - e1) * e3 * G2_EX1
            + (e2 + e1) * e3 * G4_EX1
        )

    return QuantumProblem(
        name="example1",
        generator=gen,
        params={"gamma": gamma, "a1": a1, "a2": a2, "a3": a3},
        decomposition=as_spatial_decomposition(gen),
        analytic=analytic,
    )


def example1_from_channels(gamma=1.0, a1=1.0, a2=1.0, a3=1.0, interval=DEFAULT_INTERVAL):
    """The same model assembled from :func:`conjugation_channel` blocks."""
    gamma = complex(gamma)
    return GeneratorSum(
        [
            (scalar.Const(gamma) * scalar.as_scalar_fn(a), conjugation_channel(s))
            for a, s in ((a1, SIGMA_1), (a2, SIGMA_2), (a3, SIGMA_3))
        ],
        interval,
    )


def _g1_ex2(mu):
    return np.array(
        [[mu - 1, 0, 0, mu], [0, 0, 0, 0], [0, 0, 0, 0], [1 - mu, 0, 0, -mu]], dtype=np.complex128
    )


G2_EX2 = diag(0, 1, 0, 0)
G3_EX2 = diag(0, 0, 1, 0)
F0 = SIGMA_MINUS @ SIGMA_PLUS
F1 = SIGMA_PLUS @ SIGMA_MINUS


def example2(mu=0.5, gamma=1.0, eps=0.0, c00=0.0, c01=0.0, c10=0.0, c11=0.0, interval=DEFAULT_INTERVAL):
    """Qubit with detuning ``eps``, mixed decay channels and dephasing couplings.

    The generator is stored as ``2 gamma G1 + f2 G2 + f3 G3`` with the
    mu-dependent corner matrix ``G1`` and the diagonal projectors
    ``G2 = diag(0, 1, 0, 0)``, ``G3 = diag(0, 0, 1, 0)``, where
    ``f2 = 4 c01 - 2 c00 - 2 c11 - gamma + i eps`` and ``f3`` is the same
    with ``c10`` and ``-i eps``.
    """
    mu = float(mu)
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")
    gamma, eps, c00, c01, c10, c11 = (
        scalar.as_scalar_fn(x) for x in (gamma, eps, c00, c01, c10, c11)
    )
    f1 = 2.0 * gamma
    common = -2.0 * c00 - 2.0 * c11 - gamma
    f2 = 4.0 * c01 + common + scalar.Const(1j) * eps
    f3 = 4.0 * c10 + common + scalar.Const(-1j) * eps
    g1 = _g1_ex2(mu)
    gen = GeneratorSum([(f1, g1), (f2, G2_EX2), (f3, G3_EX2)], interval)
    stationary = np.array(
        [[mu, 0, 0, mu], [0, 0, 0, 0], [0, 0, 0, 0], [1 - mu, 0, 0, 1 - mu]], dtype=np.complex128
    )

    def analytic(t):
        return (
            stationary
            + np.exp(scalar.integrate(f2, 0.0, t)) * G2_EX2
            + np.exp(scalar.integrate(f3, 0.0, t)) * G3_EX2
            - np.exp(-scalar.integrate(f1, 0.0, t)) * g1
        )

    return QuantumProblem(
        name="example2",
        generator=gen,
        params={"mu": mu, "gamma": gamma, "eps": eps, "c00": c00, "c01": c01, "c10": c10, "c11": c11},
        decomposition=as_spatial_decomposition(gen),
        analytic=analytic,
    )


def example2_from_parts(mu=0.5, gamma=1.0, eps=0.0, c00=0.0, c01=0.0, c10=0.0, c11=0.0, interval=DEFAULT_INTERVAL):
    """Example 2 assembled from the Hamiltonian, dissipator and bilinear builders.

    Term for term this is
    ``eps * H + mu gamma D[s+] + (1 - mu) gamma D[s-] + sum c_ab B[F_a, F_b]``
    with ``F_0 = s- s+`` and ``F_1 = s+ s-``; it equals :func:`example2`.
    """
    gamma, eps = scalar.as_scalar_fn(gamma), scalar.as_scalar_fn(eps)
    terms = [
        (eps, hamiltonian_part(0.5 * SIGMA_3)),
        (scalar.Const(mu) * gamma, dissipator(SIGMA_PLUS)),
        (scalar.Const(1.0 - mu) * gamma, dissipator(SIGMA_MINUS)),
    ]
    fs = (F0, F1)
    coeffs = {(0, 0): c00, (0, 1): c01, (1, 0): c10, (1, 1): c11}
    for (a, b), c in coeffs.items():
        terms.append((scalar.as_scalar_fn(c), bilinear_term(fs[a], fs[b])))
    return GeneratorSum(terms, interval)


def example2_matrix(mu, gamma, eps, c00, c01, c10, c11):
    """The 4x4 generator for constant (numeric) parameters, entry by entry."""
    return np.array(
        [
            [2 * gamma * (mu - 1), 0, 0, 2 * gamma * mu],
            [0, -2 * c00 + 4 * c01 - 2 * c11 + 1j * eps - gamma, 0, 0],
            [0, 0, -2 * c00 + 4 * c10 - 2 * c11 - 1j * eps - gamma, 0],
            [2 * gamma * (1 - mu), 0, 0, -2 * gamma * mu],
        ],
        dtype=np.complex128,
    )


def trace_functional_defect(s):
    """``||vec(I)^H S||``: zero exactly when ``S`` generates trace-preserving maps."""
    s = np.asarray(s, dtype=np.complex128)
    n = int(round(math.sqrt(s.shape[0])))
    return frob_norm(vec(np.eye(n)).conj().T @ s)
