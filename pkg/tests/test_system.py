import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lowsysid.linops import impulse_response
from lowsysid.system import (DIAGONALIZABLE, NON_DIAGONALIZABLE, GenConfig, LinearSystem, RolloutBatch, generate,
                             random_system, reversed_prefix, simulate, stack_targets)

from conftest import random_stable_system


def test_zero_inputs_give_zero_outputs(rng):
    sys = random_stable_system(rng, 3, 2, 2)
    batch = simulate(sys, np.zeros((4, 6, 2)))
    assert not np.any(batch.outputs)


def test_outputs_are_impulse_response_times_inputs(rng):
    sys = random_stable_system(rng, 3, 2, 3, d=True)
    u = rng.standard_normal((5, 8, 2))
    batch = simulate(sys, u)
    g = impulse_response(sys, 3).data
    for i in range(5):
        pred = g @ u[i].ravel()
        np.testing.assert_allclose(batch.outputs[i].ravel(), pred, rtol=1e-10, atol=1e-12)


def test_single_impulse_unrolls_recursion(rng):
    sys = random_stable_system(rng, 3, 2, 2, d=True)
    u = np.zeros((1, 8, 2))
    u[0, 0, 1] = 1.0
    y = simulate(sys, u).outputs[0]
    np.testing.assert_allclose(y[0], sys.d[:, 1])
    for t in range(1, 8):
        np.testing.assert_allclose(y[t], sys.c @ np.linalg.matrix_power(sys.a, t - 1) @ sys.b[:, 1],
                                   rtol=1e-12, atol=1e-14)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_simulate_is_linear_without_noise(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    sys = random_stable_system(rng, 2, 2, 2, d=True)
    u1, u2 = rng.standard_normal((3, 6, 2)), rng.standard_normal((3, 6, 2))
    lhs = simulate(sys, alpha * u1 + beta * u2).outputs
    rhs = alpha * simulate(sys, u1).outputs + beta * simulate(sys, u2).outputs
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(rhs).max()))


def test_noise_is_seeded_and_per_rollout(rng):
    sys = random_stable_system(rng, 2, 1, 1)
    u = rng.standard_normal((3, 4, 1))
    a = simulate(sys, u, 0.1, seed=4)
    b = simulate(sys, u, 0.1, seed=4)
    c = simulate(sys, u, 0.1, seed=5)
    np.testing.assert_array_equal(a.outputs, b.outputs)
    assert not np.array_equal(a.outputs, c.outputs)
    # rollout noise does not depend on how many rollouts are simulated
    np.testing.assert_array_equal(simulate(sys, u[:2], 0.1, seed=4).outputs, a.outputs[:2])


def test_simulate_validates():
    sys = LinearSystem(np.eye(1), np.ones((1, 1)), np.ones((1, 1)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        simulate(sys, np.zeros((2, 4, 3)))
    with pytest.raises(ValueError):
        simulate(sys, np.zeros((2, 4, 1)), noise_var=-1)
    with pytest.raises(ValueError):
        simulate(sys, np.zeros((2, 5, 1)))


def test_generate_default_shapes():
    cfg = GenConfig()
    sys, batch = generate(dataclasses.replace(cfg, n=20))  # full N=500 is slow to simulate in a unit test
    assert batch.inputs.shape == (20, 102, 8) and batch.outputs.shape == (20, 102, 8)
    assert (sys.n_x, sys.n_u, sys.n_y) == (5, 8, 8)
    assert batch.t == 102 and batch.l == 50 and batch.noise_var == 0.01


def test_generate_symmetric_and_stable():
    for seed in range(5):
        sys, _ = generate(GenConfig(n_x_star=4, n_u=2, n_y=2, n=2, l=2, seed=seed))
        np.testing.assert_array_equal(sys.a, sys.a.T)
        assert np.max(np.abs(np.linalg.eigvalsh(sys.a))) == pytest.approx(0.95, rel=1e-12)
        assert not np.any(sys.d)


def test_spectral_radius_cap():
    sys = random_system(GenConfig(n_x_star=3, spectral_radius_cap=0.5, seed=2))
    assert np.max(np.abs(np.linalg.eigvals(sys.a))) <= 0.5


def test_generate_is_deterministic():
    cfg = GenConfig(n_x_star=2, n_u=2, n_y=2, n=10, l=3, seed=9)
    _, b1 = generate(cfg)
    _, b2 = generate(cfg)
    assert b1.inputs.tobytes() == b2.inputs.tobytes()
    assert b1.outputs.tobytes() == b2.outputs.tobytes()


def test_system_independent_of_n_and_l():
    s1 = random_system(GenConfig(n_x_star=3, n=10, l=2, seed=4))
    s2 = random_system(GenConfig(n_x_star=3, n=99, l=20, seed=4))
    np.testing.assert_array_equal(s1.a, s2.a)


def test_jordan_generator():
    sys = random_system(GenConfig(n_x_star=3, system_kind=NON_DIAGONALIZABLE, seed=1))
    eig = np.linalg.eigvals(sys.a)
    np.testing.assert_allclose(eig, 0.95, atol=1e-4)  # defective: eigenvalues are ill-conditioned
    assert np.linalg.matrix_rank(sys.a - 0.95 * np.eye(3)) == 2  # one Jordan chain
    diag = random_system(GenConfig(n_x_star=3, system_kind=DIAGONALIZABLE, seed=1))
    np.testing.assert_array_equal(sys.b, diag.b)
    np.testing.assert_array_equal(sys.c, diag.c)


def test_input_covariance_near_scaled_identity():
    _, batch = generate(GenConfig(n_x_star=2, n_u=4, n_y=1, n=500, l=49, noise_var=0.0, seed=0))
    u = batch.inputs.reshape(-1, 4)
    assert u.shape[0] >= 5e4
    cov = u.T @ u / u.shape[0]
    target = np.eye(4) / 4
    assert np.linalg.norm(cov - target) < 0.05 * np.linalg.norm(target)


@pytest.mark.parametrize("field, value", [("n", 0), ("l", -1), ("noise_var", -0.1),
                                          ("spectral_radius_cap", 0.0), ("spectral_radius_cap", 1.5),
                                          ("system_kind", "weird"), ("n_u", 0)])
def test_gen_config_validation(field, value):
    with pytest.raises(ValueError):
        GenConfig(**{field: value})


def test_stack_targets_smallest_case(rng):
    sys = random_stable_system(rng, 1, 1, 1)
    batch = simulate(sys, rng.standard_normal((3, 2, 1)))
    last, full, prefix, inputs = stack_targets(batch)
    assert prefix.shape == (3, 1, 1)
    np.testing.assert_array_equal(last, batch.outputs[:, 1])
    assert np.shares_memory(full, batch.outputs) and np.shares_memory(inputs, batch.inputs)


def test_final_output_is_markov_convolution(rng):
    sys = random_stable_system(rng, 3, 2, 2)
    batch = simulate(sys, rng.standard_normal((4, 8, 2)))
    k = sys.markov(3).blocks
    last, _, prefix, _ = stack_targets(batch)
    t = batch.t
    for i in range(4):
        pred = sum(k[s - 1] @ prefix[i, t - 1 - s] for s in range(1, t))
        np.testing.assert_allclose(last[i], pred, rtol=1e-10)
    # the reversed regressor pairs K_t with u_{T-t}
    x = reversed_prefix(batch)
    np.testing.assert_allclose(x @ sys.markov(3).flat().T, last, rtol=1e-10)


def test_rollout_batch_validation():
    with pytest.raises(ValueError):
        RolloutBatch(np.zeros((2, 4, 1)), np.zeros((2, 6, 1)), 1, 0, 0.0)
    with pytest.raises(ValueError):
        RolloutBatch(np.zeros((2, 4, 1)), np.zeros((2, 4, 1)), 2, 0, 0.0)
    b = RolloutBatch(np.zeros((3, 4, 1)), np.zeros((3, 4, 1)), 1, 0, 0.0)
    assert b.head(2).n == 2
    with pytest.raises(ValueError):
        b.head(4)


def test_linear_system_similarity(rng):
    sys = random_stable_system(rng, 3, 2, 2)
    s = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    t = sys.transformed(s)
    np.testing.assert_allclose(t.markov(4).blocks, sys.markov(4).blocks, rtol=1e-9, atol=1e-12)
