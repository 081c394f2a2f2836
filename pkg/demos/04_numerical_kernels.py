"""
The numerical kernels
=====================

Everything above rests on a few small routines: a scaling-and-squaring
matrix exponential, a rank-based minimal-polynomial degree, a Jacobi
eigensolver for Hermitian matrices and exact integration of the coefficient
expressions.
"""

import numpy as np

from commuprop import linalg, scalar
from commuprop.quantum import example1
from commuprop.solver import propagate_rk4

rng = np.random.default_rng(0)

# %%
# Matrix exponential: exp(A) exp(-A) = I, and exp(A + B) = exp(A) exp(B) for
# commuting A and B.
a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
a *= 2.0 / linalg.frob_norm(a)
b = a @ a / 3.0
print("inverse defect:", linalg.frob_norm(linalg.matrix_exp(a) @ linalg.matrix_exp(-a) - np.eye(4)))
print("sum rule defect:", linalg.frob_norm(linalg.matrix_exp(a + b) - linalg.matrix_exp(a) @ linalg.matrix_exp(b)))

# %%
# Minimal-polynomial degree bounds how many exponentials a product solution
# needs.  A projector has degree 2, a generic 4x4 matrix degree 4.
print("degree of diag(1, 1, 0, 0):", linalg.min_poly_degree(np.diag([1.0, 1.0, 0.0, 0.0])))
print("degree of a random matrix:", linalg.min_poly_degree(a))

# %%
# Jacobi eigenvalues of a Hermitian matrix, without any library eigensolver.
h = a + a.conj().T
print("eigenvalues:", np.round(linalg.hermitian_eigenvalues(h), 6))

# %%
# Coefficients integrate in closed form when the expression expands into
# terms t^n exp(c t).
f = scalar.parse("t^2*sin(3*t) + exp(-t)")
print("int_0^2 f =", scalar.integrate(f, 0.0, 2.0))
print("adaptive Simpson:", scalar.integrate(f, 0.0, 2.0, method="quadrature"))

# %%
# Runge-Kutta is fourth order: halving the step cuts the error about 16-fold.
p = example1(1.0, "sin(t)", "cos(t)", 1)
exact = p.analytic(1.0)
errors = [linalg.frob_norm(propagate_rk4(p.generator, 1.0, n) - exact) for n in (10, 20, 40, 80)]
for n, (e1, e2) in zip((10, 20, 40), zip(errors, errors[1:])):
    print(f"{n:3d} -> {2 * n:3d} steps: error ratio {e1 / e2:.2f}")
