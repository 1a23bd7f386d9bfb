"""Ground-truth systems, rollout simulation and synthetic data generation.

Random streams are derived from ``(seed, purpose, rollout index)`` so every
rollout is reproducible on its own: the first ``N`` rollouts of a larger
batch are identical to a batch of size ``N`` built from the same seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linops import MarkovSequence, markov_blocks

DIAGONALIZABLE = "diagonalizable-symmetric"
NON_DIAGONALIZABLE = "non-diagonalizable"
SYSTEM_KINDS = (DIAGONALIZABLE, NON_DIAGONALIZABLE)

# stream tags for SeedSequence spawn keys
_SYSTEM, _INPUT, _NOISE = 0, 1, 2

_RADIUS_FRACTION = 0.95
_JORDAN_EIGENVALUE = 0.5

NoiseSampler = Callable[[np.random.Generator, tuple], np.ndarray]


def gaussian_noise(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    return rng.standard_normal(shape)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


@dataclass(frozen=True)
class LinearSystem:
    """State-space tuple ``x+ = A x + B u``, ``y = C x + D u``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("a", "b", "c", "d"):
            m = np.atleast_2d(np.array(getattr(self, name), dtype=float))
            if m.ndim != 2:
                raise ValueError(f"{name} must be a matrix")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} has non-finite entries")
            m.setflags(write=False)
            mats[name] = m
        a, b, c, d = mats["a"], mats["b"], mats["c"], mats["d"]
        nx = a.shape[0]
        if a.shape != (nx, nx):
            raise ValueError(f"A must be square, got {a.shape}")
        if b.shape[0] != nx:
            raise ValueError(f"B has {b.shape[0]} rows, expected n_x={nx}")
        if c.shape[1] != nx:
            raise ValueError(f"C has {c.shape[1]} columns, expected n_x={nx}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise ValueError(f"D must be {(c.shape[0], b.shape[1])}, got {d.shape}")
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @property
    def n_x(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.b.shape[1]

    @property
    def n_y(self) -> int:
        return self.c.shape[0]

    def markov(self, l: int) -> MarkovSequence:
        return MarkovSequence(markov_blocks(self.a, self.b, self.c, 2 * l + 1))

    def transformed(self, s: np.ndarray) -> "LinearSystem":
        """Similarity transform ``(S A S^-1, S B, C S^-1, D)``."""
        s_inv = np.linalg.inv(s)
        return LinearSystem(s @ self.a @ s_inv, s @ self.b, self.c @ s_inv, self.d)

    @classmethod
    def zero(cls, n_u: int, n_y: int, n_x: int = 0) -> "LinearSystem":
        # n_x = 0 is represented by a 1-state system with zero matrices
        n = max(n_x, 1)
        return cls(np.zeros((n, n)), np.zeros((n, n_u)), np.zeros((n_y, n)), np.zeros((n_y, n_u)))


@dataclass(frozen=True)
class RolloutBatch:
    """``N`` trajectories of length ``T = 2(L+1)``; ``inputs`` is ``(N, T, n_u)``, ``outputs`` ``(N, T, n_y)``."""

    inputs: np.ndarray
    outputs: np.ndarray
    l: int
    seed: int = 0
    noise_var: float = 0.0

    def __post_init__(self):
        u = np.array(self.inputs, dtype=float)
        y = np.array(self.outputs, dtype=float)
        if u.ndim != 3 or y.ndim != 3:
            raise ValueError("inputs and outputs must be (N, T, channels) tensors")
        if u.shape[:2] != y.shape[:2]:
            raise ValueError(f"inputs {u.shape} and outputs {y.shape} disagree on (N, T)")
        if u.shape[1] != 2 * (self.l + 1):
            raise ValueError(f"T={u.shape[1]} but 2(L+1)={2 * (self.l + 1)}")
        if self.l < 0:
            raise ValueError("L must be non-negative")
        u.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "outputs", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def t(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_u(self) -> int:
        return self.inputs.shape[2]

    @property
    def n_y(self) -> int:
        return self.outputs.shape[2]

    def head(self, n: int) -> "RolloutBatch":
        """First ``n`` rollouts (shares the seed metadata)."""
        if not 1 <= n <= self.n:
            raise ValueError(f"cannot take {n} of {self.n} rollouts")
        return RolloutBatch(self.inputs[:n], self.outputs[:n], self.l, self.seed, self.noise_var)


@dataclass(frozen=True)
class GenConfig:
    n_x_star: int = 5
    n_u: int = 8
    n_y: int = 8
    n: int = 500
    l: int = 50
    noise_var: float = 0.01
    system_kind: str = DIAGONALIZABLE
    spectral_radius_cap: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n (rollout count) must be >= 1")
        if self.l < 0:
            raise ValueError("l must be >= 0")
        if min(self.n_x_star, self.n_u, self.n_y) < 1:
            raise ValueError("dimensions must be >= 1")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        if not 0 < self.spectral_radius_cap <= 1:
            raise ValueError("spectral_radius_cap must lie in (0, 1]")
        if self.system_kind not in SYSTEM_KINDS:
            raise ValueError(f"system_kind must be one of {SYSTEM_KINDS}, got {self.system_kind!r}")


def simulate(sys: LinearSystem, inputs: np.ndarray, noise_var: float = 0.0, seed: int = 0,
             l: int | None = None, noise_sampler: NoiseSampler = gaussian_noise) -> RolloutBatch:
    """Roll out ``sys`` from ``x_1 = 0`` on each input trajectory and add output noise."""
    u = np.asarray(inputs, dtype=float)
    if u.ndim != 3 or u.shape[2] != sys.n_u:
        raise ValueError(f"inputs must be (N, T, {sys.n_u}), got {u.shape}")
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    n, t, _ = u.shape
    if t < 2 or t % 2:
        raise ValueError(f"trajectory length must be even and >= 2, got {t}")
    x = np.zeros((n, sys.n_x))
    y = np.empty((n, t, sys.n_y))
    for k in range(t):
        y[:, k] = x @ sys.c.T + u[:, k] @ sys.d.T
        x = x @ sys.a.T + u[:, k] @ sys.b.T
    if noise_var > 0:
        scale = np.sqrt(noise_var)
        for i in range(n):
            y[i] += scale * noise_sampler(stream(seed, _NOISE, i), (t, sys.n_y))
    return RolloutBatch(u, y, t // 2 - 1 if l is None else l, seed, noise_var)


def random_system(cfg: GenConfig) -> LinearSystem:
    """Draw the ground-truth system; depends only on the seed and dimensions, not on ``N`` or ``L``."""
    rng = stream(cfg.seed, _SYSTEM)
    n = cfg.n_x_star
    # drawn for both kinds so that B and C match across kinds for a given seed
    m = rng.standard_normal((n, n))
    if cfg.system_kind == DIAGONALIZABLE:
        a = (m + m.T) / 2
        radius = np.max(np.abs(np.linalg.eigvalsh(a)))
    else:
        a = _JORDAN_EIGENVALUE * np.eye(n) + np.eye(n, k=1)
        radius = _JORDAN_EIGENVALUE
    a = a * (cfg.spectral_radius_cap * _RADIUS_FRACTION / radius)
    if cfg.system_kind == DIAGONALIZABLE:
        a = (a + a.T) / 2  # exact symmetry after rescaling
    b = rng.standard_normal((n, cfg.n_u))
    c = rng.standard_normal((cfg.n_y, n))
    return LinearSystem(a, b, c, np.zeros((cfg.n_y, cfg.n_u)))


def random_inputs(seed: int, n: int, t: int, n_u: int) -> np.ndarray:
    """``N(0, I/n_u)`` inputs, one independent stream per rollout."""
    scale = 1.0 / np.sqrt(n_u)
    return np.stack([scale * stream(seed, _INPUT, i).standard_normal((t, n_u)) for i in range(n)])


def generate(cfg: GenConfig) -> tuple[LinearSystem, RolloutBatch]:
    sys = random_system(cfg)
    t = 2 * (cfg.l + 1)
    inputs = random_inputs(cfg.seed, cfg.n, t, cfg.n_u)
    return sys, simulate(sys, inputs, cfg.noise_var, cfg.seed, cfg.l)


def reversed_prefix(batch: RolloutBatch) -> np.ndarray:
    """Regressor rows ``[u_{T-1}, u_{T-2}, ..., u_1]`` so that ``K_t`` multiplies ``u_{T-t}``."""
    return batch.inputs[:, -2::-1, :].reshape(batch.n, -1)


def stack_targets(batch: RolloutBatch):
    """Regression views: ``(y_T, full outputs, u_1..u_{2L+1}, full inputs)``."""
    return (batch.outputs[:, -1, :], batch.outputs, batch.inputs[:, :-1, :], batch.inputs)
