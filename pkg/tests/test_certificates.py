import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lowsysid import oracle
from lowsysid.certificates import golden_section, grid_maximize, polar_bm, polar_sp, sp_polar_matrices
from lowsysid.linops import gamma
from lowsysid.solvers import FactorPair, SpParams, balanced_factors
from lowsysid.solvers.data import trajectory_data
from lowsysid.system import GenConfig, RolloutBatch, generate, simulate

from conftest import random_stable_system


# ---------------------------------------------------------------- golden section

def test_golden_section_quadratic():
    x, fx = golden_section(lambda x: (x - 0.3) ** 2, -1.0, 1.0, tol=1e-8)
    assert abs(x - 0.3) < 1e-7
    assert fx < 1e-14


def test_golden_section_monotone_returns_endpoint():
    x, _ = golden_section(lambda x: x, 0.0, 1.0)
    assert x == 0.0
    x, _ = golden_section(lambda x: -x, 0.0, 1.0)
    assert x == 1.0


def test_golden_section_multimodal_needs_grid():
    f = lambda x: -math.cos(4 * x)  # minima at 0 (global on [-1, 1]) and near the ends
    x_local, _ = golden_section(f, 0.6, 1.0, tol=1e-9)
    assert abs(x_local) > 0.5  # pure bracketing from a bad bracket stays local
    x, v, _ = grid_maximize(lambda xs: np.cos(4 * xs), -1.0, 1.0, 21)
    assert abs(x) < 1e-6 and v == pytest.approx(1.0)


def test_golden_section_respects_eval_cap():
    calls = []

    def f(x):
        calls.append(x)
        return (x - 0.1) ** 2

    golden_section(f, 0.0, 1.0, tol=1e-15, max_eval=12)
    assert len(calls) <= 13


def test_golden_section_validates():
    with pytest.raises(ValueError):
        golden_section(lambda x: x, 1.0, 0.0)
    with pytest.raises(ValueError):
        golden_section(lambda x: x, 0.0, 1.0, tol=0)


def test_golden_section_deterministic():
    f = lambda x: math.sin(3 * x) + x * x
    assert golden_section(f, -2, 2) == golden_section(f, -2, 2)


# ---------------------------------------------------------------- BM polar

def dense_bm_polar(batch, blocks, lam):
    """Residual correlation built entry by entry, then the Hankel (adjoint-of-averaging) SVD."""
    n, t, nu = batch.inputs.shape
    ny = batch.n_y
    m = np.zeros((t - 1, ny, nu))
    for i in range(n):
        pred = sum(blocks[k - 1] @ batch.inputs[i, t - 1 - k] for k in range(1, t))
        r = batch.outputs[i, -1] - pred
        for k in range(1, t):
            m[k - 1] += np.outer(r, batch.inputs[i, t - 1 - k])
    m /= n * lam
    counts = np.array([min(k + 1, t - 1 - k) for k in range(t - 1)], dtype=float)
    h = oracle.dense_hankel(m / counts[:, None, None])
    return np.linalg.svd(h, compute_uv=False)[0]


def test_polar_bm_zero_residual():
    sys, batch = generate(GenConfig(n_x_star=2, n_u=1, n_y=1, n=6, l=2, noise_var=0.0, seed=2))
    f = balanced_factors(sys.markov(2), 2)
    assert polar_bm(f, batch, 1e-3).value < 1e-9


def test_polar_bm_scales_inversely_with_lambda(tiny_batch):
    f = FactorPair(np.full((8, 1), 0.1), np.full((8, 1), 0.1), 2, 2)
    p1 = polar_bm(f, tiny_batch, 1e-2).value
    p2 = polar_bm(f, tiny_batch, 1e-3).value
    assert p2 == pytest.approx(10 * p1, rel=1e-12)


def test_polar_bm_matches_dense_reference():
    _, batch = generate(GenConfig(n_x_star=1, n_u=1, n_y=1, n=3, l=2, noise_var=0.1, seed=5))
    rng = np.random.default_rng(0)
    f = FactorPair(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)), 1, 1)
    value = polar_bm(f, batch, 0.01).value
    assert value == pytest.approx(dense_bm_polar(batch, f.markov().blocks, 0.01), rel=1e-12)


def test_polar_bm_requires_lambda(tiny_batch):
    f = FactorPair(np.ones((8, 1)), np.ones((8, 1)), 2, 2)
    with pytest.raises(ValueError):
        polar_bm(f, tiny_batch, 0.0)


def test_polar_bm_witness_consistent(tiny_batch):
    f = FactorPair(np.full((8, 1), 0.2), np.full((8, 1), -0.1), 2, 2)
    res = polar_bm(f, tiny_batch, 1e-3)
    assert np.linalg.svd(res.matrix, compute_uv=False)[0] == pytest.approx(res.value, rel=1e-10)
    assert res.left @ res.matrix @ res.right == pytest.approx(res.value, rel=1e-10)


def test_polar_bm_permutation_invariant(tiny_batch):
    f = FactorPair(np.full((8, 1), 0.2), np.full((8, 1), -0.1), 2, 2)
    perm = np.array([3, 0, 4, 1, 2])
    shuffled = RolloutBatch(tiny_batch.inputs[perm], tiny_batch.outputs[perm], tiny_batch.l)
    assert polar_bm(f, shuffled, 1e-3).value == pytest.approx(polar_bm(f, tiny_batch, 1e-3).value, rel=1e-12)


# ---------------------------------------------------------------- SP polar

def dense_sp_matrix(batch, residual, lam, a):
    """``(1/(2N(L+1) lambda gamma(a))) sum_i R_i P(a) U_i^T`` with ``P`` materialized."""
    n, t, _ = batch.inputs.shape
    p = oracle.shift_matrix_dense(a, t)
    total = sum(residual[i].T @ p @ batch.inputs[i] for i in range(n))
    return total / (2 * n * (batch.l + 1) * lam * gamma(a, batch.l))


def test_sp_polar_matrix_matches_dense(tiny_batch):
    rng = np.random.default_rng(1)
    res = rng.standard_normal(tiny_batch.outputs.shape)
    data = trajectory_data(tiny_batch)
    poles = np.array([-0.7, 0.0, 0.35, 0.99])
    mats = sp_polar_matrices(res, data, 1e-2, poles)
    for k, a in enumerate(poles):
        np.testing.assert_allclose(mats[k], dense_sp_matrix(tiny_batch, res, 1e-2, a), rtol=1e-12)


def test_polar_sp_zero_residual():
    sys, batch = generate(GenConfig(n_x_star=1, n_u=2, n_y=2, n=4, l=2, noise_var=0.0, seed=0))
    p = SpParams(np.diag(sys.a), sys.b, sys.c)
    assert polar_sp(p, batch, 1e-3).value < 1e-10


def expected_correlation(a, a0, l):
    # white-input expectation of <M(a)> along the planted direction, up to a constant
    t = 2 * (l + 1)
    k = np.arange(t - 1)
    return np.sum((t - 1 - k) * (a * a0) ** k) / gamma(a, l)


def test_polar_sp_recovers_planted_memoryless_pole():
    rng = np.random.default_rng(3)
    plant = random_stable_system(rng, 1, 2, 2)
    plant = type(plant)([[0.0]], plant.b, plant.c, np.zeros((2, 2)))
    # one impulse per (time, channel): sum_i u_t u_s^T = delta_ts I exactly
    impulses = np.eye(22 * 2).reshape(44, 22, 2)
    batch = simulate(plant, impulses, l=10)
    zero = SpParams(np.zeros(1), np.zeros((1, 2)), np.zeros((2, 1)))
    assert abs(polar_sp(zero, batch, 1e-3).pole) < 1e-3


def test_planted_pole_is_shrunk_by_the_gamma_normalization():
    poles = np.linspace(-0.999, 0.999, 20001)
    best = poles[np.argmax([expected_correlation(a, 0.62, 10) for a in poles])]
    assert 0.3 < best < 0.35  # the pole of the maximizing atom is not the planted pole


def test_polar_sp_matches_dense_pole_scan():
    rng = np.random.default_rng(7)
    plant = random_stable_system(rng, 1, 2, 2)
    plant = type(plant)([[0.62]], plant.b, plant.c, np.zeros((2, 2)))
    batch = simulate(plant, rng.standard_normal((50, 12, 2)) / np.sqrt(2), l=5)
    zero = SpParams(np.zeros(1), np.zeros((1, 2)), np.zeros((2, 1)))
    res = polar_sp(zero, batch, 1e-3)
    poles = np.linspace(-0.999, 0.999, 4001)
    scan = [np.linalg.norm(dense_sp_matrix(batch, batch.outputs, 1e-3, a), 2) for a in poles]
    assert res.value >= max(scan) * (1 - 1e-9)
    assert res.value == pytest.approx(max(scan), rel=1e-5)


def test_polar_sp_grid_density_consistent():
    _, batch = generate(GenConfig(n_x_star=2, n_u=2, n_y=2, n=30, l=4, noise_var=0.01, seed=4))
    p = SpParams([0.1], [[0.1, 0.0]], [[0.1], [0.2]])
    coarse = polar_sp(p, batch, 1e-2, grid=3)
    fine = polar_sp(p, batch, 1e-2, grid=201)
    assert coarse.value == pytest.approx(fine.value, abs=1e-6)


def test_polar_sp_witness_and_permutation(tiny_batch):
    p = SpParams([0.3], [[0.1, -0.1]], [[0.2], [0.05]])
    res = polar_sp(p, tiny_batch, 1e-3)
    assert np.linalg.svd(res.matrix, compute_uv=False)[0] == pytest.approx(res.value, rel=1e-10)
    perm = np.array([4, 2, 0, 1, 3])
    shuffled = RolloutBatch(tiny_batch.inputs[perm], tiny_batch.outputs[perm], tiny_batch.l)
    assert polar_sp(p, shuffled, 1e-3).value == pytest.approx(res.value, rel=1e-10)


def test_polar_sp_validates(tiny_batch):
    p = SpParams([0.3], [[0.1, -0.1]], [[0.2], [0.05]])
    with pytest.raises(ValueError):
        polar_sp(p, tiny_batch, 0.0)
    with pytest.raises(ValueError):
        polar_sp(p, tiny_batch, 1e-3, grid=2)
    with pytest.raises(ValueError):
        polar_sp(p, tiny_batch, 1e-3, residual=np.full(tiny_batch.outputs.shape, np.inf))


@given(st.floats(-0.99, 0.99))
def test_polar_sp_value_dominates_every_pole(a):
    _, batch = generate(GenConfig(n_x_star=2, n_u=2, n_y=2, n=8, l=3, noise_var=0.01, seed=11))
    p = SpParams([0.2], [[0.1, 0.1]], [[0.1], [0.1]])
    data = trajectory_data(batch)
    from lowsysid.certificates import sp_residual
    m = sp_polar_matrices(sp_residual(p, data), data, 1e-2, np.array([a]))[0]
    assert np.linalg.norm(m, 2) <= polar_sp(p, batch, 1e-2, a_bound=0.99).value * (1 + 1e-9)
