"""Global-optimality certificates (polar values) and the 1-D search they rely on."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .linops import extract_adjoint_blocks, flat_blocks, gamma, unflat_blocks
from .solvers.data import final_output_data, trajectory_data
from .solvers.params import FactorPair, SpParams

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PolarResult:
    """Polar value with its witness.

    ``matrix`` is the matrix whose spectral norm is ``value``; ``left`` and
    ``right`` are its top singular vectors (``v*, z*`` for the Hankel
    factors, ``c*, b*`` for a mode). ``pole`` is the supremizing ``a*`` for
    the system-parameter polar and ``None`` otherwise.
    """

    value: float
    left: np.ndarray
    right: np.ndarray
    matrix: np.ndarray
    pole: Optional[float] = None
    evaluations: int = 0


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8,
                   max_eval: int = 200) -> tuple[float, float]:
    """Minimize ``f`` on ``[lo, hi]`` by golden-ratio bracketing.

    The endpoints are evaluated as well and the best point seen is
    returned, so monotone functions yield the matching endpoint. Only a
    local minimum is guaranteed for multi-modal ``f``.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if tol <= 0:
        raise ValueError("tol must be positive")
    seen = []

    def ev(x):
        fx = float(f(x))
        seen.append((fx, x))
        return fx

    ev(lo)
    ev(hi)
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = ev(x1), ev(x2)
    while b - a > tol and len(seen) < max_eval:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = ev(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = ev(x2)
    fx, x = min(seen, key=lambda p: (p[0], p[1]))
    return x, fx


def grid_maximize(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, grid: int,
                  tol: float = 1e-9, max_eval: int = 200) -> tuple[float, float, int]:
    """Maximize ``g`` over ``[lo, hi]``: uniform grid, then golden-section refinement around the best grid point.

    ``g`` is vectorized (takes an array of points). Ties go to the smaller
    point. Returns ``(x*, g(x*), evaluations)``.
    """
    xs = np.linspace(lo, hi, grid)
    vals = np.asarray(g(xs), dtype=float)
    k = int(np.argmax(vals))
    best_x, best_v = float(xs[k]), float(vals[k])
    a, b = float(xs[max(k - 1, 0)]), float(xs[min(k + 1, grid - 1)])
    x, fx = golden_section(lambda p: -float(g(np.array([p]))[0]), a, b, tol, max_eval)
    evals = grid + max_eval
    if -fx > best_v:
        best_x, best_v = x, -fx
    return best_x, best_v, evals


def _top_pair(m: np.ndarray):
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return float(s[0]), u[:, 0], vt[0]


def bm_witness(flat_corr: np.ndarray, lam: float, n_u: int) -> np.ndarray:
    """Matrix whose spectral norm is the Hankel-factor polar, from ``(1/N) sum_i r_i x_i^T``.

    This is the Frobenius adjoint of the anti-diagonal-averaging extraction
    applied to ``M = corr / lambda``: block ``(i, j)`` is ``M_{i+j-1} / m_{i+j-1}``
    with ``m_t`` the number of blocks on anti-diagonal ``t``.
    """
    return extract_adjoint_blocks(unflat_blocks(flat_corr / lam, n_u))


def polar_bm(f: FactorPair, batch, lam: float) -> PolarResult:
    """Polar of the Burer-Monteiro program at factors ``f``; at most 1 certifies global optimality."""
    if lam <= 0:
        raise ValueError("polar undefined for lambda <= 0")
    data = final_output_data(batch)
    flat = flat_blocks(f.markov().blocks)
    w = bm_witness(data.correlation(flat), lam, data.n_u)
    value, left, right = _top_pair(w)
    return PolarResult(value, left, right, w, None, 1)


def sp_residual(p: SpParams, data) -> np.ndarray:
    """Full-trajectory residual ``Y - prediction``, shape ``(N, T, n_y)``."""
    q = np.einsum("ntu,ru->rnt", data.u, p.b_rows)
    s = kernels.causal_filter(q, p.a)
    return data.y - np.einsum("rnt,yr->nty", s, p.c_cols)


def sp_polar_matrices(residual: np.ndarray, data, lam: float, poles: np.ndarray,
                      chunk: int = 16) -> np.ndarray:
    """``M(a)`` for each pole: ``(1 / (2N(L+1) lambda gamma(a))) sum_i R_i P(a) U_i^T``."""
    poles = np.atleast_1d(np.asarray(poles, dtype=float))
    rt = np.ascontiguousarray(residual.transpose(0, 2, 1)).reshape(1, -1, data.y.shape[1])
    out = np.empty((poles.size, data.n_y, data.n_u))
    norm = 2.0 * data.n * (data.l + 1) * lam
    for s in range(0, poles.size, chunk):
        block = poles[s:s + chunk]
        g = kernels.anticausal_filter(np.broadcast_to(rt, (block.size,) + rt.shape[1:]), block)
        g = g.reshape(block.size, data.n, data.n_y, -1)
        m = np.einsum("knyt,ntu->kyu", g, data.u)
        gam = np.array([gamma(a, data.l) for a in block])
        out[s:s + chunk] = m / (norm * gam[:, None, None])
    return out


def polar_sp(p: SpParams, batch, lam: float, a_bound: float = 0.999, grid: int = 101,
             residual: Optional[np.ndarray] = None) -> PolarResult:
    """Polar of the system-parameter program: ``sup_{|a| <= a_bound} ||M(a)||_2`` by grid plus golden section."""
    if lam <= 0:
        raise ValueError("polar undefined for lambda <= 0")
    if grid < 3:
        raise ValueError("grid must be >= 3")
    data = trajectory_data(batch)
    r = sp_residual(p, data) if residual is None else residual
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite residual")
    if not np.any(r):
        z = np.zeros((data.n_y, data.n_u))
        return PolarResult(0.0, np.zeros(data.n_y), np.zeros(data.n_u), z, 0.0, 0)

    def g(poles):
        mats = sp_polar_matrices(r, data, lam, poles)
        return np.linalg.norm(mats, ord=2, axis=(1, 2))

    a_star, _, evals = grid_maximize(g, -a_bound, a_bound, grid)
    m = sp_polar_matrices(r, data, lam, np.array([a_star]))[0]
    value, left, right = _top_pair(m)
    return PolarResult(value, left, right, m, a_star, evals)
