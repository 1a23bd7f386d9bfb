"""State-space realizations from Markov parameters or from Hankel factors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linops import MarkovSequence, hankel_blocks
from .system import LinearSystem

DEFAULT_RANK_TOL = 1e-6
DEFAULT_PINV_TOL = 1e-10


@dataclass(frozen=True)
class RealizationResult:
    sys: LinearSystem
    order: int
    singular_values: np.ndarray


def truncated_pinv(m: np.ndarray, rel_tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Pseudo-inverse dropping singular values below ``rel_tol * sigma_1``."""
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(m.T.shape)
    keep = s > rel_tol * s[0]
    return (vt[keep].T / s[keep]) @ u[:, keep].T


def ho_kalman(k: MarkovSequence, rank_tol: float = DEFAULT_RANK_TOL,
              order: int | None = None) -> RealizationResult:
    """Balanced Ho-Kalman realization.

    The order is the number of Hankel singular values above
    ``rank_tol * sigma_1`` unless ``order`` fixes it. ``A`` solves the
    shifted-observability least squares over all ``L`` block shifts.
    """
    if k.l < 1:
        raise ValueError("Ho-Kalman needs L >= 1 for a shifted block row")
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    ny, nu = k.n_y, k.n_u
    u, s, vt = np.linalg.svd(hankel_blocks(k.blocks), full_matrices=False)
    if s[0] <= 0:
        return RealizationResult(LinearSystem.zero(nu, ny), 0, s)
    if order is None:
        order = int(np.sum(s > rank_tol * s[0]))
    elif not 1 <= order <= s.size:
        raise ValueError(f"order must lie in [1, {s.size}]")
    root = np.sqrt(s[:order])
    obs = u[:, :order] * root
    ctr = root[:, None] * vt[:order]
    a, *_ = np.linalg.lstsq(obs[:-ny], obs[ny:], rcond=None)
    sys = LinearSystem(a, ctr[:, :nu], obs[:ny], np.zeros((ny, nu)))
    return RealizationResult(sys, order, s)


def extract_from_factors(v: np.ndarray, z: np.ndarray, n_y: int, n_u: int,
                         pinv_tol: float = DEFAULT_PINV_TOL) -> LinearSystem:
    """System read off Burer-Monteiro factors ``(V, Z)`` of the Hankel matrix.

    ``C`` is the first block row of ``V``, ``B`` the first block column of
    ``Z^T`` and ``A = C^+ V_2`` with ``V_2`` the second block row of ``V``.
    ``A`` is exact only when the first block row has full column rank.
    """
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    if v.shape[1] != z.shape[1]:
        raise ValueError(f"factor ranks differ: {v.shape[1]} vs {z.shape[1]}")
    if v.shape[0] < 2 * n_y:
        raise ValueError("need at least two block rows in V (L >= 1) for the shift")
    if v.shape[0] % n_y or z.shape[0] % n_u:
        raise ValueError("factor heights must be multiples of the block sizes")
    c = v[:n_y]
    a = truncated_pinv(c, pinv_tol) @ v[n_y:2 * n_y]
    b = z.T[:, :n_u]
    return LinearSystem(a, b, c, np.zeros((n_y, n_u)))
