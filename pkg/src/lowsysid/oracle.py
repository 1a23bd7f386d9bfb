"""Brute-force reference computations for tests.

Nothing in the solvers imports this module. Each routine rebuilds its
quantity from fully materialized operators with plain loops, so agreement
with the structured code paths catches bugs shared by clever shortcuts.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg

MAX_DENSE_ENTRIES = 1_000_000


def nuclear_norm(m: np.ndarray) -> float:
    """Sum of singular values from a full SVD."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if m.size == 0:
        return 0.0
    return float(np.sum(scipy.linalg.svd(m, compute_uv=False, lapack_driver="gesvd")))


def nuclear_norm_eig(m: np.ndarray) -> float:
    """Second route to the nuclear norm: square roots of the eigenvalues of ``M^T M``."""
    m = np.asarray(m, dtype=float)
    small = m if m.shape[0] >= m.shape[1] else m.T
    w = np.linalg.eigvalsh(small.T @ small)
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def finite_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h``, coordinate by coordinate."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    flat = x.ravel()
    for i in range(x.size):
        up = flat.copy()
        dn = flat.copy()
        up[i] += h
        dn[i] -= h
        fu, fd = float(f(up.reshape(x.shape))), float(f(dn.reshape(x.shape)))
        if not (np.isfinite(fu) and np.isfinite(fd)):
            raise ValueError(f"non-finite function value at coordinate {i}")
        g[i] = (fu - fd) / (2.0 * h)
    return g.reshape(x.shape)


def dense_hankel(blocks: np.ndarray) -> np.ndarray:
    """Hankel matrix assembled entry by entry."""
    count, ny, nu = blocks.shape
    p = (count + 1) // 2
    h = np.zeros((p * ny, p * nu))
    for i in range(p):
        for j in range(p):
            for a in range(ny):
                for b in range(nu):
                    h[i * ny + a, j * nu + b] = blocks[i + j, a, b]
    return h


def dense_average_extract(m: np.ndarray, ny: int, nu: int) -> np.ndarray:
    """Anti-diagonal block averages by explicit accumulation."""
    p = m.shape[0] // ny
    count = 2 * p - 1
    acc = np.zeros((count, ny, nu))
    hits = np.zeros(count)
    for i in range(p):
        for j in range(p):
            acc[i + j] += m[i * ny:(i + 1) * ny, j * nu:(j + 1) * nu]
            hits[i + j] += 1
    return acc / hits[:, None, None]


def shift_matrix_dense(a: float, t: int) -> np.ndarray:
    """``P(a)``: ``P[s, k] = a^(s-k-1)`` for ``s > k``, zero otherwise."""
    p = np.zeros((t, t))
    for s in range(t):
        for k in range(s):
            p[s, k] = a ** (s - k - 1)
    return p


def dense_gamma(a: float, l: int) -> float:
    """Hankel nuclear norm of the unit mode ``a^(t-1)``, by SVD."""
    seq = np.array([a ** t for t in range(2 * l + 1)]).reshape(-1, 1, 1)
    return nuclear_norm(dense_hankel(seq))


def _guard(entries: int):
    if entries > MAX_DENSE_ENTRIES:
        raise ValueError(f"dense reference needs {entries} entries (> {MAX_DENSE_ENTRIES})")


def _final_output_loss(blocks: np.ndarray, batch) -> float:
    n, t, _ = batch.inputs.shape
    total = 0.0
    for i in range(n):
        pred = np.zeros(batch.n_y)
        for k in range(1, t):
            pred += blocks[k - 1] @ batch.inputs[i, t - 1 - k]
        r = batch.outputs[i, -1] - pred
        total += float(r @ r)
    return total / (2.0 * n)


def dense_reference_objective(method: str, params, batch, lam: float) -> float:
    """Objective of ``method`` evaluated through materialized operators.

    Parameters
    ----------
    method : {"nuc", "bm", "sp"}
    params
        ``MarkovSequence`` for ``nuc``, ``FactorPair`` for ``bm``,
        ``SpParams`` for ``sp``.
    batch : RolloutBatch
    lam : float

    Notes
    -----
    The system-parameter prediction is formed as
    ``sum_j (P(a_j) kron c_j b_j^T) vec(U_i)`` with the full Kronecker
    matrix, which limits this routine to tiny problems.
    """
    n, t, nu = batch.inputs.shape
    ny = batch.n_y
    if method == "nuc":
        blocks = np.asarray(params.blocks)
        _guard(blocks.size * 4)
        return _final_output_loss(blocks, batch) + lam * nuclear_norm(dense_hankel(blocks))
    if method == "bm":
        v, z = np.asarray(params.v), np.asarray(params.z)
        _guard(v.shape[0] * z.shape[0])
        blocks = dense_average_extract(v @ z.T, ny, nu)
        return _final_output_loss(blocks, batch) + 0.5 * lam * (float(np.sum(v ** 2)) + float(np.sum(z ** 2)))
    if method == "sp":
        _guard((t * ny) * (t * nu))
        a, b, c = np.asarray(params.a), np.asarray(params.b_rows), np.asarray(params.c_cols)
        ops = [np.kron(shift_matrix_dense(a[j], t), np.outer(c[:, j], b[j])) for j in range(a.size)]
        total = 0.0
        for i in range(n):
            pred = sum((op @ batch.inputs[i].ravel() for op in ops), np.zeros(t * ny))
            r = batch.outputs[i].ravel() - pred
            total += float(r @ r)
        data = total / (4.0 * n * (batch.l + 1))
        reg = sum(dense_gamma(a[j], batch.l) * np.linalg.norm(b[j]) * np.linalg.norm(c[:, j])
                  for j in range(a.size))
        return data + lam * float(reg)
    raise ValueError(f"unknown method {method!r}")
