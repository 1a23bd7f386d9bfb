import numpy as np
import pytest
from hypothesis import given, strategies as st

from lowsysid import oracle
from lowsysid.linops import gamma

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 6), st.integers(1, 6))
def test_nuclear_norm_two_routes_agree(seed, m, n):
    a = np.random.default_rng(seed).standard_normal((m, n))
    assert oracle.nuclear_norm(a) == pytest.approx(oracle.nuclear_norm_eig(a), rel=1e-7)


def test_nuclear_norm_examples():
    assert oracle.nuclear_norm(np.diag([3.0, -2.0])) == pytest.approx(5.0)
    assert oracle.nuclear_norm(np.zeros((0, 3))) == 0.0
    with pytest.raises(ValueError):
        oracle.nuclear_norm(np.array([[np.inf]]))


def test_finite_difference_exact_on_quadratic(rng):
    q = rng.standard_normal((4, 4))
    q = q + q.T
    x = rng.standard_normal(4)
    g = oracle.finite_diff_grad(lambda v: 0.5 * v @ q @ v, x)
    np.testing.assert_allclose(g, q @ x, rtol=1e-7, atol=1e-8)
    with pytest.raises(ValueError):
        oracle.finite_diff_grad(lambda v: 0.0, x, h=0)
    with pytest.raises(ValueError):
        oracle.finite_diff_grad(lambda v: np.nan, x)


@given(st.floats(-0.99, 0.99), st.integers(0, 15))
def test_dense_gamma_matches_closed_form(a, l):
    assert oracle.dense_gamma(a, l) == pytest.approx(gamma(a, l), rel=1e-10)


def test_shift_matrix_dense_examples():
    np.testing.assert_array_equal(oracle.shift_matrix_dense(0.5, 3), [[0, 0, 0], [1, 0, 0], [0.5, 1, 0]])


def test_dense_hankel_example():
    np.testing.assert_array_equal(oracle.dense_hankel(np.arange(1.0, 4.0).reshape(3, 1, 1)), [[1, 2], [2, 3]])


def test_dense_average_extract_example():
    out = oracle.dense_average_extract(np.array([[1.0, 2.0], [4.0, 3.0]]), 1, 1)
    np.testing.assert_array_equal(out.ravel(), [1, 3, 3])


def test_dense_reference_guard():
    from lowsysid.system import RolloutBatch
    from lowsysid.solvers import SpParams
    t = 2 * 51
    batch = RolloutBatch(np.zeros((1, t, 16)), np.zeros((1, t, 16)), 50)  # (T n_y)(T n_u) > 1e6
    with pytest.raises(ValueError):
        oracle.dense_reference_objective("sp", SpParams([0.1], np.ones((1, 16)), np.ones((16, 1))), batch, 1e-3)
