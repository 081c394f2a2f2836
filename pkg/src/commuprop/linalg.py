"""Dense complex matrix primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  The
functions here never mutate their inputs.  The exponential and the Hermitian
eigenvalue routine are written out explicitly (scaling-and-squaring and cyclic
Jacobi) so that no eigen-decomposition is needed on the solver path.
"""

import math

import numpy as np

from .errors import DimensionError, NotHermitianError

RANK_RTOL = 1e-10
HERMITIAN_ATOL = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-12


def as_matrix(a):
    """Return ``a`` as a finite 2-D complex128 array.

    Raises
    ------
    DimensionError
        If ``a`` is not two-dimensional or has an empty axis.
    ValueError
        If any entry is NaN or infinite.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _square(a, name="matrix"):
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def commutator(a, b):
    """Return ``a @ b - b @ a``."""
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def vec(a):
    """Stack the columns of ``a`` into a single column (shape ``(n*m, 1)``)."""
    m = as_matrix(a)
    return m.reshape(-1, 1, order="F")


def unvec(v, n):
    """Inverse of :func:`vec` for an ``n x n`` matrix."""
    arr = np.asarray(v, dtype=np.complex128).reshape(-1)
    if n < 1 or arr.size != n * n:
        raise DimensionError(f"vector of length {arr.size} cannot be reshaped to {n}x{n}")
    return arr.reshape(n, n, order="F")


def frob_norm(a):
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))


def matrix_exp(a):
    """Matrix exponential by scaling and squaring with a Taylor core.

    The argument is scaled by ``2**-s`` until its Frobenius norm is at most
    0.5; the series is summed until the next term is below 1e-16 of the
    partial sum, then the result is squared ``s`` times.
    """
    a = _square(a)
    n = a.shape[0]
    norm = frob_norm(a)
    s = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    scaled = a / (2.0**s) if s else a

    result = np.eye(n, dtype=np.complex128)
    term = np.eye(n, dtype=np.complex128)
    for k in range(1, 200):
        term = term @ scaled / k
        result = result + term
        if frob_norm(term) < 1e-16 * frob_norm(result):
            break
    for _ in range(s):
        result = result @ result
    return result


def numerical_rank(vectors, rtol=RANK_RTOL):
    """Rank of the column set ``vectors`` using a relative singular-value cut."""
    mat = np.asarray(vectors, dtype=np.complex128)
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def min_poly_degree(a, rtol=RANK_RTOL):
    """Degree of the minimal polynomial of ``a``.

    Found as the smallest ``m`` for which ``I, A, ..., A^m`` are linearly
    dependent once vectorized.  Each power is normalized before the rank test
    so that the threshold is insensitive to the growth of ``A^k``.
    """
    a = _square(a)
    n = a.shape[0]
    power = np.eye(n, dtype=np.complex128)
    columns = [power.reshape(-1) / frob_norm(power)]
    for m in range(1, n + 1):
        power = power @ a
        nrm = frob_norm(power)
        if nrm == 0.0:
            return m
        columns.append(power.reshape(-1) / nrm)
        if numerical_rank(np.column_stack(columns), rtol) < m + 1:
            return m
    return n


def hermitian_defect(a):
    """Frobenius distance between ``a`` and its conjugate transpose."""
    a = np.asarray(a, dtype=np.complex128)
    return frob_norm(a - a.conj().T)


def hermitian_eigenvalues(a, atol=HERMITIAN_ATOL):
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns the eigenvalues sorted ascending as a float array.

    Raises
    ------
    NotHermitianError
        If ``a`` differs from its adjoint by more than ``atol`` (Frobenius).
    """
    a = _square(a)
    if hermitian_defect(a) > atol:
        raise NotHermitianError(f"matrix is not Hermitian (defect {hermitian_defect(a):.3e})")
    work = 0.5 * (a + a.conj().T)
    n = work.shape[0]
    scale = frob_norm(work)
    if scale == 0.0:
        return np.zeros(n)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(frob_norm(work) ** 2 - np.sum(np.abs(np.diag(work)) ** 2), 0.0))
        if off < JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = work[p, q]
                mag = abs(b)
                if mag < 1e-300:
                    continue
                phase = b / mag
                app = work[p, p].real
                aqq = work[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # V = diag(1, conj(phase)) on (p, q) followed by the real rotation [[c, s], [-s, c]]
                rot = np.eye(n, dtype=np.complex128)
                rot[p, p] = c
                rot[p, q] = s
                rot[q, p] = -s * np.conj(phase)
                rot[q, q] = c * np.conj(phase)
                work = rot.conj().T @ work @ rot
                work[p, q] = work[q, p] = 0.0
    return np.sort(np.diag(work).real)


def matrix_to_json(a):
    """Encode as ``{"rows", "cols", "data": [[re, im], ...]}`` in row-major order."""
    m = as_matrix(a)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj):
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from None
    if len(data) != rows * cols:
        raise DimensionError(f"matrix JSON has {len(data)} entries, expected {rows * cols}")
    values = [complex(float(re), float(im)) for re, im in data]
    return as_matrix(np.array(values, dtype=np.complex128).reshape(rows, cols))
