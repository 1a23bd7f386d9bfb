"""Numpy implementations of the compiled kernels (same signatures and results)."""
import numpy as np


def _power_band(a, nt):
    # P[t, s] = a**(t - s - 1) for t > s
    lag = np.arange(nt)[:, None] - np.arange(nt)[None, :] - 1
    mask = lag >= 0
    out = np.zeros((nt, nt))
    out[mask] = float(a) ** lag[mask]
    return out


def causal_filter(x, a):
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.shape[0] != x.shape[0]:
        raise ValueError("one pole per leading slice expected")
    nt = x.shape[2]
    out = np.empty((x.shape[0], x.shape[1], nt))
    for k in range(x.shape[0]):
        out[k] = x[k] @ _power_band(a[k], nt).T
    return out


def anticausal_filter(x, a):
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.shape[0] != x.shape[0]:
        raise ValueError("one pole per leading slice expected")
    nt = x.shape[2]
    out = np.empty((x.shape[0], x.shape[1], nt))
    for k in range(x.shape[0]):
        out[k] = x[k] @ _power_band(a[k], nt)
    return out


def antidiag_sum(blocks):
    blocks = np.asarray(blocks, dtype=float)
    p, ny, q, nu = blocks.shape
    out = np.zeros((p + q - 1, ny, nu))
    grid = blocks.transpose(0, 2, 1, 3)
    for i in range(p):
        out[i:i + q] += grid[i]
    return out


def modal_terms(u, y, a, b, c):
    """Squared residual and raw gradient correlations of a sum of first-order modes.

    See the compiled twin for the definitions; this version works on whole
    ``(r, N, T)`` tensors.
    """
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n, nt, nu = u.shape
    ny = y.shape[2]
    r = a.shape[0]
    if b.shape != (r, nu) or c.shape != (ny, r):
        raise ValueError("parameter shapes do not match the data")
    if y.shape[:2] != (n, nt):
        raise ValueError("inputs and outputs disagree on (N, T)")
    uf = u.reshape(-1, nu)
    s = causal_filter(np.ascontiguousarray((b @ uf.T).reshape(r, n, nt)), a)
    s2 = s.reshape(r, -1)
    res = y.reshape(-1, ny).T - c @ s2  # (n_y, N T)
    e = (c.T @ res).reshape(r, n, nt)
    gc = res @ s2.T
    gb = anticausal_filter(e, a).reshape(r, -1) @ uf
    ga = np.einsum("rk,rk->r", e.reshape(r, -1), causal_filter(s, a).reshape(r, -1))
    return float(np.vdot(res, res)), ga, gb, gc
