import numpy as np
import pytest
from hypothesis import given, strategies as st

from lowsysid import oracle
from lowsysid.linops import (MarkovSequence, antidiagonal_counts, gamma, gamma_grad, hankel_adjoint_sum,
                             hankel_extract, hankel_map, impulse_from_markov, impulse_response, is_hankel,
                             shift_power_matrix)
from lowsysid.system import LinearSystem

from conftest import random_stable_system


def rand_markov(rng, l, ny, nu):
    return MarkovSequence(rng.standard_normal((2 * l + 1, ny, nu)))


# ---------------------------------------------------------------- gamma

@pytest.mark.parametrize("a, l, expected", [(0.0, 10, 1.0), (1.0, 4, 5.0), (0.5, 2, 1.3125)])
def test_gamma_examples(a, l, expected):
    assert gamma(a, l) == expected


def test_gamma_at_unit_modulus_has_no_singularity():
    assert gamma(-1.0, 7) == 8.0


def test_gamma_rejects_negative_horizon():
    with pytest.raises(ValueError):
        gamma(0.3, -1)


@given(st.floats(-1.2, 1.2), st.integers(0, 12))
def test_gamma_grad_matches_finite_difference(a, l):
    fd = oracle.finite_diff_grad(lambda x: gamma(float(x[0]), l), np.array([a]), h=1e-6)[0]
    assert gamma_grad(a, l) == pytest.approx(fd, rel=1e-6, abs=1e-7)


# ---------------------------------------------------------------- P(a)

def test_shift_power_matrix_examples():
    np.testing.assert_array_equal(shift_power_matrix(0.5, 0), [[0, 0], [1, 0]])
    np.testing.assert_array_equal(shift_power_matrix(0.0, 1), np.eye(4, k=-1))
    np.testing.assert_array_equal(shift_power_matrix(2.0, 1)[1:, 0], [1, 2, 4])


@given(st.floats(-1.5, 1.5), st.integers(0, 6))
def test_shift_power_matrix_matches_dense_loop(a, l):
    np.testing.assert_allclose(shift_power_matrix(a, l), oracle.shift_matrix_dense(a, 2 * (l + 1)),
                               rtol=1e-13, atol=0)


# ---------------------------------------------------------------- Hankel map

def test_hankel_map_scalar_example():
    k = MarkovSequence(np.array([1.0, 2.0, 3.0]).reshape(3, 1, 1))
    np.testing.assert_array_equal(hankel_map(k).data, [[1, 2], [2, 3]])


def test_hankel_map_zero():
    assert not np.any(hankel_map(MarkovSequence.zeros(3, 2, 2)).data)


def test_hankel_map_l2_antidiagonals_constant(rng):
    k = rand_markov(rng, 2, 1, 1)
    h = hankel_map(k).data
    for i in range(3):
        for j in range(3):
            assert h[i, j] == k.blocks[i + j, 0, 0]


@given(st.integers(0, 5), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_hankel_map_matches_entrywise_oracle(l, ny, nu, seed):
    k = rand_markov(np.random.default_rng(seed), l, ny, nu)
    np.testing.assert_array_equal(hankel_map(k).data, oracle.dense_hankel(k.blocks))


# ---------------------------------------------------------------- extraction

@given(st.integers(0, 5), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_extract_is_left_inverse_exactly(l, ny, nu, seed):
    k = rand_markov(np.random.default_rng(seed), l, ny, nu)
    back = hankel_extract(hankel_map(k))
    np.testing.assert_array_equal(back.blocks, k.blocks)


def test_extract_averages_non_hankel_input():
    out = hankel_extract(np.array([[1.0, 2.0], [4.0, 3.0]]), 1, 1)
    np.testing.assert_array_equal(out.blocks.ravel(), [1, 3, 3])


def test_extract_zero():
    assert not np.any(hankel_extract(np.zeros((6, 3)), 2, 1).blocks)


def test_extract_dimension_mismatch():
    with pytest.raises(ValueError):
        hankel_extract(np.zeros((5, 4)), 2, 2)
    with pytest.raises(ValueError):
        hankel_extract(np.zeros((4, 6)), 2, 2)  # 2x3 block grid is not square


@given(st.integers(0, 4), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_extract_matches_accumulation_oracle(l, ny, nu, seed):
    m = np.random.default_rng(seed).standard_normal(((l + 1) * ny, (l + 1) * nu))
    np.testing.assert_allclose(hankel_extract(m, ny, nu).blocks, oracle.dense_average_extract(m, ny, nu),
                               rtol=1e-13, atol=1e-15)


@given(st.integers(0, 4), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_hankel_projection_is_idempotent_and_self_adjoint(l, ny, nu, seed):
    rng = np.random.default_rng(seed)
    shape = ((l + 1) * ny, (l + 1) * nu)
    m1, m2 = rng.standard_normal(shape), rng.standard_normal(shape)

    def proj(m):
        return hankel_map(hankel_extract(m, ny, nu)).data

    p1 = proj(m1)
    np.testing.assert_allclose(proj(p1), p1, rtol=1e-13, atol=1e-14)
    assert np.vdot(p1, m2) == pytest.approx(np.vdot(m1, proj(m2)), rel=1e-12, abs=1e-12)
    assert is_hankel(p1, ny, nu)


def test_is_hankel_detects_structure(rng):
    k = rand_markov(rng, 3, 2, 2)
    h = hankel_map(k).data
    assert is_hankel(h, 2, 2)
    h2 = h.copy()
    h2[0, 2] += 1e-6  # block (1, 2); block (1, 1) is alone on its anti-diagonal
    assert not is_hankel(h2, 2, 2)


# ---------------------------------------------------------------- adjoint

def test_adjoint_sum_examples():
    np.testing.assert_array_equal(hankel_adjoint_sum(np.array([[1.0, 2.0], [4.0, 3.0]]), 1, 1).blocks.ravel(),
                                  [1, 6, 3])
    np.testing.assert_array_equal(hankel_adjoint_sum(np.eye(2), 1, 1).blocks.ravel(), [1, 0, 1])


@given(st.integers(0, 5), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_adjoint_identity(l, ny, nu, seed):
    rng = np.random.default_rng(seed)
    k = rand_markov(rng, l, ny, nu)
    m = rng.standard_normal(((l + 1) * ny, (l + 1) * nu))
    lhs = np.vdot(hankel_map(k).data, m)
    rhs = np.vdot(k.blocks, hankel_adjoint_sum(m, ny, nu).blocks)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_adjoint_is_counts_times_average(rng):
    m = rng.standard_normal((8, 12))
    s = hankel_adjoint_sum(m, 2, 3).blocks
    avg = hankel_extract(m, 2, 3).blocks
    np.testing.assert_allclose(s, avg * antidiagonal_counts(3)[:, None, None], rtol=1e-14)


# ---------------------------------------------------------------- impulse response

def test_impulse_response_scalar_example():
    sys = LinearSystem([[0.5]], [[1.0]], [[1.0]], [[0.0]])
    np.testing.assert_array_equal(impulse_response(sys, 0).data, [[0, 0], [1, 0]])


def test_impulse_response_feedthrough_and_zero_dynamics(rng):
    b, c = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    sys = LinearSystem(np.zeros((2, 2)), b, c, np.eye(2))
    g = impulse_response(sys, 1).data.reshape(4, 2, 4, 2).transpose(0, 2, 1, 3)
    for i in range(4):
        for j in range(4):
            if i == j:
                np.testing.assert_array_equal(g[i, j], np.eye(2))
            elif i == j + 1:
                np.testing.assert_allclose(g[i, j], c @ b)
            else:
                assert not np.any(g[i, j])


def test_impulse_response_block_toeplitz_lower_triangular(rng):
    sys = random_stable_system(rng, 3, 2, 2, d=True)
    g = impulse_response(sys, 3).data.reshape(8, 2, 8, 2).transpose(0, 2, 1, 3)
    for i in range(8):
        for j in range(8):
            if i < j:
                assert not np.any(g[i, j])
            elif i > 0 and j > 0:
                np.testing.assert_array_equal(g[i, j], g[i - 1, j - 1])


@given(st.integers(0, 2**32 - 1))
def test_impulse_response_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    sys = random_stable_system(rng, 3, 2, 2, d=True)
    s = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    g1 = impulse_response(sys, 4).data
    g2 = impulse_response(sys.transformed(s), 4).data
    assert np.linalg.norm(g1 - g2) <= 1e-10 * np.linalg.norm(g1)


def test_impulse_response_handles_jordan_block_exactly():
    a = np.array([[0.5, 1.0], [0.0, 0.5]])
    sys = LinearSystem(a, [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    blocks = impulse_response(sys, 3).data[1:, 0]
    # C A^{k} B = k 0.5^{k-1}
    np.testing.assert_allclose(blocks, [k * 0.5 ** (k - 1) if k else 0.0 for k in range(7)], rtol=1e-15)


def test_impulse_response_dimension_mismatch():
    with pytest.raises(ValueError):
        LinearSystem(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))


def test_impulse_from_markov_matches_system(rng):
    sys = random_stable_system(rng, 2, 2, 3)
    g = impulse_from_markov(sys.markov(3)).data
    np.testing.assert_allclose(g, impulse_response(sys, 3).data, rtol=1e-14)


def test_impulse_from_markov_scalar_toeplitz():
    g = impulse_from_markov(MarkovSequence(np.array([1.0, 2.0, 3.0]).reshape(3, 1, 1))).data
    expected = np.array([[0, 0, 0, 0], [1, 0, 0, 0], [2, 1, 0, 0], [3, 2, 1, 0]], dtype=float)
    np.testing.assert_array_equal(g, expected)
    assert not np.any(impulse_from_markov(MarkovSequence.zeros(1, 1, 1)).data)


# ---------------------------------------------------------------- mode identity

@given(st.floats(-0.99, 0.99), st.floats(0.1, 3), st.floats(0.1, 3), st.integers(0, 12))
def test_scalar_mode_nuclear_norm_is_gamma(a, b, c, l):
    seq = MarkovSequence((c * b * a ** np.arange(2 * l + 1)).reshape(-1, 1, 1))
    nn = oracle.nuclear_norm(hankel_map(seq).data)
    assert nn == pytest.approx(gamma(a, l) * abs(b) * abs(c), rel=1e-10)


def test_markov_sequence_invariants():
    with pytest.raises(ValueError):
        MarkovSequence(np.zeros((4, 1, 1)))
    with pytest.raises(ValueError):
        MarkovSequence(np.full((3, 1, 1), np.nan))
    k = MarkovSequence.zeros(2, 3, 1)
    assert (k.l, k.n_y, k.n_u) == (2, 3, 1)
    with pytest.raises(ValueError):
        k.blocks[0, 0, 0] = 1.0
