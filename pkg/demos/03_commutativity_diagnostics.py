"""
When exp(int L) is wrong
========================

``exp(int_0^t L)`` solves ``Phi' = L Phi`` only when the generator commutes
with itself at different times.  Here ``L(t) = s1 + t s2`` does not, and the
diagnostics say so before any wrong answer is produced.
"""

import numpy as np

from commuprop import GeneratorSum, check_functional_commutativity, magnus2_term
from commuprop.errors import NotCommutativeError
from commuprop.generator import integrate_generator
from commuprop.linalg import matrix_exp
from commuprop.quantum import SIGMA_1, SIGMA_2
from commuprop.solver import Propagator, propagate_rk4

L = GeneratorSum([(1, SIGMA_1), ("t", SIGMA_2)], interval=(-1.0, 2.0))

# %%
# The pairwise test finds the worst pair of sample times.  Because
# [L(t), L(s)] = (s - t)[s1, s2], its norm is 2*sqrt(2)*|s - t|.
report = check_functional_commutativity(L)
t, s = report.witness_pair
print("commutative:", report.is_commutative)
print(f"witness ({t}, {s}): norm {report.witness_norm:.6f} vs 2*sqrt(2)*|s-t| = {2 * np.sqrt(2) * abs(s - t):.6f}")
print("derivative test agrees:", report.consistent)

# %%
# The exact route refuses to run.
try:
    Propagator.exact(L, report)
except NotCommutativeError as exc:
    print("refused:", exc)

# %%
# The second Magnus term measures how far exp(int L) is off.  It is about
# 0.236 at t = 1, and the gap to the Runge-Kutta solution is of that size.
omega2 = magnus2_term(L, 1.0)
naive = matrix_exp(integrate_generator(L, 1.0))
reference = propagate_rk4(L, 1.0)
print(f"||Omega_2(1)|| = {np.linalg.norm(omega2):.4f}")
print(f"||exp(int L) - Phi_rk4|| = {np.linalg.norm(naive - reference):.4f}")
print(f"||exp(int L + Omega_2) - Phi_rk4|| = {np.linalg.norm(matrix_exp(integrate_generator(L, 1.0) + omega2) - reference):.4f}")
