import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from commuprop.commutativity import as_spatial_decomposition, check_functional_commutativity
from commuprop.errors import NotCommutativeError
from commuprop.generator import GeneratorSum, integrate_generator
from commuprop.linalg import commutator, frob_norm
from commuprop.quantum import SIGMA_1, SIGMA_2, example1, example2
from commuprop.solver import (
    Propagator,
    Trajectory,
    magnus2_term,
    propagate_exact,
    propagate_rk4,
    propagate_zhu,
    trajectory,
)

from conftest import random_matrix


def counterexample():
    return GeneratorSum([(1, SIGMA_1), ("t", SIGMA_2)], (-1.0, 2.0))


def all_propagators(g, decomposition=None):
    rep = check_functional_commutativity(g)
    d = decomposition or as_spatial_decomposition(g)
    return Propagator.exact(g, rep), Propagator.zhu(d), Propagator.rk4(g)


def test_exact_constant_generator(rng):
    a = random_matrix(rng, 3, scale=0.5)
    g = GeneratorSum([(1, a)], (-1, 3))
    rep = check_functional_commutativity(g)
    assert np.allclose(propagate_exact(g, 1.3, rep), expm(1.3 * a), rtol=1e-12, atol=1e-13)


def test_exact_refuses_without_passing_report():
    g = counterexample()
    with pytest.raises(NotCommutativeError):
        propagate_exact(g, 1.0, None)
    rep = check_functional_commutativity(g)
    with pytest.raises(NotCommutativeError):
        propagate_exact(g, 1.0, rep)
    with pytest.raises(NotCommutativeError):
        Propagator.exact(g, rep)


def test_identity_at_zero(rng):
    g = example1(1.0, "sin(t)", "cos(t)", 1).generator
    for p in all_propagators(g):
        assert frob_norm(p(0.0) - np.eye(4)) <= 1e-12
    assert frob_norm(propagate_rk4(counterexample(), 0.0) - np.eye(2)) <= 1e-12


def test_exact_example1_matches_rk4():
    g = example1(1.0, 1, 1, 1).generator
    rep = check_functional_commutativity(g)
    assert frob_norm(propagate_exact(g, 1.0, rep) - propagate_rk4(g, 1.0, 10_000)) <= 1e-8


def test_product_single_part(rng):
    a = random_matrix(rng, 2)
    d = as_spatial_decomposition(GeneratorSum([(0.7 - 0.2j, a)]))
    assert np.allclose(propagate_zhu(d, 0.9), expm((0.7 - 0.2j) * 0.9 * a), rtol=1e-12, atol=1e-13)


def test_product_example1_entry_matches_closed_form():
    p = example1(0.8, "t", "t^2", "exp(-t)")
    d = p.decomposition
    for t in (0.3, 1.0, 1.7):
        phi = propagate_zhu(d, t)
        integral = t**2 / 2 + t**3 / 3
        assert phi[0, 0] == pytest.approx(0.5 * (1 + math.exp(-2 * 0.8 * integral)), abs=1e-13)
        assert np.allclose(phi, p.analytic(t), atol=1e-12)


def test_product_example2_matches_closed_form():
    p = example2(0.3, "1 + 0.5*sin(t)", "2*cos(t)", 0.1, "0.2*t", 0.2, 0.1)
    for t in (0.5, 1.5):
        assert np.allclose(propagate_zhu(p.decomposition, t), p.analytic(t), atol=1e-12)


def test_rk4_zero_generator():
    g = GeneratorSum([(0, np.eye(3))])
    for steps in (1, 7, 100):
        assert np.array_equal(propagate_rk4(g, 0.9, steps), np.eye(3))


def test_rk4_constant_generator(rng):
    a = random_matrix(rng, 3)
    a *= 2.0 / frob_norm(a)
    g = GeneratorSum([(1, a)], (-1, 2))
    assert frob_norm(propagate_rk4(g, 1.0, 10_000) - expm(a)) <= 1e-10


def test_rk4_fourth_order_convergence():
    p = example1(1.0, "sin(t)", "cos(t)", 1)
    exact = p.analytic(1.0)
    errs = [frob_norm(propagate_rk4(p.generator, 1.0, n) - exact) for n in (20, 40, 80)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 12 <= coarse / fine <= 20


def test_magnus_constant_generator(rng):
    g = GeneratorSum([(1, random_matrix(rng, 3))])
    assert frob_norm(magnus2_term(g, 0.8)) <= 1e-10


@pytest.mark.parametrize("coeffs", [(1, 1, 1), ("sin(t)", "cos(t)", 1), ("t", "t^2", "exp(-t)")])
def test_magnus_vanishes_on_example1(coeffs):
    g = example1(1.0, *coeffs).generator
    for t in (0.5, 2.0):
        assert frob_norm(magnus2_term(g, t)) <= 1e-9


def test_magnus_counterexample_against_nested_riemann_sums():
    g = counterexample()
    m = 2000
    h = 1.0 / m
    mids = (np.arange(m) + 0.5) * h
    mats = g.evaluate_many(mids)
    # midpoint rule for the inner integral, accumulated left to right
    inner = np.cumsum(mats, axis=0) * h - 0.5 * h * mats
    integrand = np.einsum("aij,ajk->aik", inner, mats) - np.einsum("aij,ajk->aik", mats, inner)
    riemann = -0.5 * integrand.sum(axis=0) * h
    omega = magnus2_term(g, 1.0)
    assert frob_norm(omega) > 0.1
    assert frob_norm(omega - riemann) <= 1e-5
    assert frob_norm(omega) == pytest.approx(2 * math.sqrt(2) / 12, rel=1e-9)


def test_cross_method_agreement():
    g = example1(1.3, "t", "t^2", "exp(-t)").generator
    exact, product, rk4 = all_propagators(g)
    for t in np.linspace(0, 2, 9):
        e = exact(t)
        assert frob_norm(e - product(t)) <= 1e-9 * (1 + frob_norm(e))
        assert frob_norm(e - rk4(t)) <= 1e-7


@pytest.mark.parametrize("method", [0, 1, 2])
def test_derivative_condition(method):
    g = example2(0.7, "1 + 0.5*cos(t)", "t", 0.1, 0.2, "0.3*sin(t)", 0.1).generator
    p = all_propagators(g)[method]
    h = 1e-4
    for t in (0.4, 1.1):
        numeric = (p(t + h) - p(t - h)) / (2 * h)
        assert frob_norm(numeric - g(t) @ p(t)) <= 1e-5


def test_product_order_independence():
    p = example1(0.9, "sin(t)", "t", "exp(-t)")
    d = p.decomposition
    ref = propagate_zhu(d, 1.4)
    for order in itertools.permutations(range(len(d.parts))):
        assert frob_norm(propagate_zhu(d.permuted(order), 1.4) - ref) <= 1e-10


def test_trajectory_at_zero_only():
    g = example1().generator
    for p in all_propagators(g):
        tr = trajectory(p, [0.0])
        assert len(tr) == 1 and np.allclose(tr.values[0], np.eye(4), atol=1e-12)


def test_trajectory_product_vs_rk4():
    g = example1(1.0, "sin(t)", "cos(t)", 1).generator
    _, product, rk4 = all_propagators(g)
    times = np.linspace(0, 2, 21)
    a, b = trajectory(product, times), trajectory(rk4, times)
    assert max(frob_norm(x - y) for x, y in zip(a.values, b.values)) <= 1e-8


def test_rk4_march_matches_restart():
    g = example1(1.0, "t", 1, 1).generator
    p = Propagator.rk4(g, steps_per_unit=500)
    tr = trajectory(p, [-0.5, 0.0, 0.4, 1.0])
    for t, phi in tr:
        assert frob_norm(phi - propagate_rk4(g, t, max(1, round(500 * abs(t))))) <= 1e-9


def test_semigroup_for_constant_generator(rng):
    g = GeneratorSum([(1, random_matrix(rng, 3, scale=0.5))], (-1, 9))
    exact, product, _ = all_propagators(g)
    for p in (exact, product):
        for t in (0.25, 0.5, 1.0, 2.0, 4.0):
            assert frob_norm(p(2 * t) - p(t) @ p(t)) <= 1e-10


def test_parallel_trajectory_matches_serial():
    g = example1(1.0, "sin(t)", "cos(t)", 1).generator
    _, product, _ = all_propagators(g)
    times = np.linspace(0, 2, 11)
    serial = trajectory(product, times)
    fresh = Propagator.zhu(as_spatial_decomposition(g))
    parallel = trajectory(fresh, times, parallel=True)
    assert np.array_equal(serial.values, parallel.values)


def test_cache_returns_same_object():
    p = Propagator.zhu(as_spatial_decomposition(example1().generator))
    assert p(0.5) is p(0.5)
    with pytest.raises(ValueError):
        p(0.5)[0, 0] = 1.0


def test_trajectory_validation():
    p = Propagator.rk4(example1().generator)
    with pytest.raises(ValueError):
        trajectory(p, [0.5, 0.2])
    with pytest.raises(ValueError):
        trajectory(p, [])
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], np.zeros((2, 2, 2)))


def test_csv_and_json_export(tmp_path):
    g = GeneratorSum([(1j, np.array([[0, 1], [1, 0]]))], (-1, 2))
    p = Propagator.zhu(as_spatial_decomposition(g))
    tr = trajectory(p, [0.0, 0.5, 1.0])
    text = tr.to_csv(tmp_path / "out.csv")
    lines = text.strip().split("\n")
    assert lines[0] == "t,re_0_0,re_0_1,re_1_0,re_1_1,im_0_0,im_0_1,im_1_0,im_1_1"
    assert len(lines) == 4
    row = [float(x) for x in lines[2].split(",")]
    assert row[0] == 0.5
    # exp(i t sigma_1) = cos t I + i sin t sigma_1
    assert row[1] == pytest.approx(math.cos(0.5), abs=1e-15)
    assert row[6] == pytest.approx(math.sin(0.5), abs=1e-15)
    assert (tmp_path / "out.csv").read_text() == text
    obj = tr.to_json()
    assert obj["kind"] == "propagator" and obj["method"] == "zhu"
    assert obj["times"] == [0.0, 0.5, 1.0] and len(obj["values"]) == 3


def test_integral_used_by_exact_is_termwise():
    g = example1(1.0, "t", 1, 1).generator
    rep = check_functional_commutativity(g)
    phi = propagate_exact(g, 1.0, rep)
    assert frob_norm(commutator(phi, integrate_generator(g, 1.0))) <= 1e-12
