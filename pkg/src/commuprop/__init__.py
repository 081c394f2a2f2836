"""Closed-form propagators for functionally commutative linear ODEs.

Solves ``dPhi/dt = L(t) Phi`` when ``L(t) L(s) = L(s) L(t)``, either as
``exp(int_0^t L)`` or as a finite product over a spatial decomposition, with
an RK4 reference integrator and a quantum master-equation front-end.
"""

from .commutativity import (
    CommutativityReport,
    DecompositionPart,
    SampledDecomposition,
    SpatialDecomposition,
    as_spatial_decomposition,
    check_functional_commutativity,
    martin_decompose,
)
from .errors import (
    CommupropError,
    DecompositionError,
    DimensionError,
    IntervalError,
    NotCommutativeError,
    NotHermitianError,
    ParseError,
    QuadratureError,
    UnphysicalStateError,
)
from .generator import (
    GeneratorSum,
    Interval,
    derivative_generator,
    eval_generator,
    integrate_generator,
)
from .linalg import (
    commutator,
    frob_norm,
    hermitian_eigenvalues,
    kron,
    matrix_exp,
    min_poly_degree,
    unvec,
    vec,
)
from .scalar import ScalarFn, integrate, parse
from .solver import (
    Propagator,
    Trajectory,
    magnus2_term,
    propagate_exact,
    propagate_rk4,
    propagate_zhu,
    trajectory,
)

__version__ = "0.1.0"
