"""Parameterizations shared by the solvers and their certificates."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..linops import MarkovSequence, extract_blocks
from ..system import LinearSystem


@dataclass(frozen=True)
class FactorPair:
    """Burer-Monteiro factors with ``V Z^T`` approximating the Hankel matrix."""

    v: np.ndarray
    z: np.ndarray
    n_y: int
    n_u: int

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        z = np.array(self.z, dtype=float)
        if v.ndim != 2 or z.ndim != 2 or v.shape[1] != z.shape[1]:
            raise ValueError(f"factor shapes {v.shape} and {z.shape} do not conform")
        if v.shape[1] < 1:
            raise ValueError("factor rank must be >= 1")
        if v.shape[0] % self.n_y or z.shape[0] % self.n_u or v.shape[0] // self.n_y != z.shape[0] // self.n_u:
            raise ValueError("factor heights must be (L+1) n_y and (L+1) n_u")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(z))):
            raise ValueError("factors must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "z", z)

    @property
    def r(self) -> int:
        return self.v.shape[1]

    @property
    def l(self) -> int:
        return self.v.shape[0] // self.n_y - 1

    def markov(self) -> MarkovSequence:
        return MarkovSequence(extract_blocks(self.v @ self.z.T, self.n_y, self.n_u))


@dataclass(frozen=True)
class SpParams:
    """Diagonal-system parameters: poles ``a``, input rows ``b_j`` and output columns ``c_j``."""

    a: np.ndarray
    b_rows: np.ndarray
    c_cols: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b_rows, dtype=float)
        c = np.array(self.c_cols, dtype=float)
        if b.ndim != 2 or c.ndim != 2 or b.shape[0] != a.size or c.shape[1] != a.size:
            raise ValueError(f"inconsistent shapes a={a.shape}, B={b.shape}, C={c.shape}")
        if not all(np.all(np.isfinite(m)) for m in (a, b, c)):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b_rows", b)
        object.__setattr__(self, "c_cols", c)

    @property
    def r(self) -> int:
        return self.a.size

    @property
    def n_u(self) -> int:
        return self.b_rows.shape[1]

    @property
    def n_y(self) -> int:
        return self.c_cols.shape[0]

    def system(self) -> LinearSystem:
        return LinearSystem(np.diag(self.a), self.b_rows, self.c_cols, np.zeros((self.n_y, self.n_u)))

    def markov(self, l: int) -> MarkovSequence:
        powers = self.a[None, :] ** np.arange(2 * l + 1)[:, None]
        blocks = np.einsum("yr,tr,ru->tyu", self.c_cols, powers, self.b_rows)
        return MarkovSequence(blocks)


@dataclass(frozen=True)
class SolverConfig:
    """Hyper-parameters of one solver run.

    ``lr=None`` selects a step size from a Lipschitz estimate of the data
    term, refreshed as the iterates move. ``lam=0`` is allowed for exactly
    realizable problems; no optimality certificate exists then, so the
    factored solvers stop after one inner loop with ``converged``.
    """

    lam: float = 1e-3
    lr: Optional[float] = None
    momentum: float = 0.9
    max_iter: int = 2000
    r_init: int = 1
    r_max: int = 10
    polar_tol: float = 1e-2
    stat_tol: float = 1e-6
    a_bound: float = 0.999
    seed: int = 0
    time_budget_s: Optional[float] = None
    grid: int = 101
    rank_tol: float = 1e-6
    eval_every: int = 10
    max_total_iter: Optional[int] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.lr is not None and self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.polar_tol <= 0:
            raise ValueError("polar_tol must be > 0")
        if not 1 <= self.r_init <= self.r_max:
            raise ValueError("need 1 <= r_init <= r_max")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.a_bound < 1 + 1e-12:
            raise ValueError("a_bound must lie in (0, 1]")
        if self.grid < 3:
            raise ValueError("grid must be >= 3")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.time_budget_s is not None and self.time_budget_s <= 0:
            raise ValueError("time_budget_s must be > 0")
        if self.stat_tol < 0 or self.rank_tol <= 0:
            raise ValueError("stat_tol must be >= 0 and rank_tol > 0")
        if self.max_total_iter is not None and self.max_total_iter < 1:
            raise ValueError("max_total_iter must be >= 1")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)
