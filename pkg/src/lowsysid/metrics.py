"""Evaluation quantities: recovery error, weighted recovery norm, Hankel spectrum, condition number."""
from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np

from .linops import ImpulseResponse, MarkovSequence, hankel_blocks, toeplitz_blocks


def _check_pair(g_hat: ImpulseResponse, g_star: ImpulseResponse):
    if g_hat.data.shape != g_star.data.shape:
        raise ValueError(f"impulse responses differ in shape: {g_hat.data.shape} vs {g_star.data.shape}")


def recovery_error(g_hat: ImpulseResponse, g_star: ImpulseResponse) -> float:
    """``||G_hat - G*||_F / sqrt(2 n_y n_u (L+1))``."""
    _check_pair(g_hat, g_star)
    norm = np.sqrt(2.0 * g_star.n_y * g_star.n_u * (g_star.l + 1))
    return float(np.linalg.norm(g_hat.data - g_star.data) / norm)


def psd_sqrt(sigma: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(sigma, sigma.T, atol=tol * max(1.0, np.abs(sigma).max())):
        raise ValueError("covariance must be symmetric")
    w, q = np.linalg.eigh((sigma + sigma.T) / 2)
    if w.min() < -tol * max(1.0, abs(w).max()):
        raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {w.min():.3g})")
    return (q * np.sqrt(np.clip(w, 0, None))) @ q.T


def weighted_recovery(g_hat: ImpulseResponse, g_star: ImpulseResponse, sigma_u: np.ndarray) -> float:
    """``||(G_hat - G*)(I (x) Sigma_U^{1/2})||_F`` with the Kronecker factor applied per block column."""
    _check_pair(g_hat, g_star)
    root = psd_sqrt(sigma_u)
    if root.shape[0] != g_star.n_u:
        raise ValueError(f"covariance must be {g_star.n_u}x{g_star.n_u}")
    diff = g_hat.data - g_star.data
    rows = diff.shape[0]
    weighted = diff.reshape(rows, -1, g_star.n_u) @ root
    return float(np.linalg.norm(weighted))


def hankel_spectrum(k: MarkovSequence) -> np.ndarray:
    """All singular values of the Hankel matrix of ``k``, descending."""
    return np.linalg.svd(hankel_blocks(k.blocks), compute_uv=False)


def gaussian_inputs(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    """``N(0, I/n_u)`` samples; ``shape`` ends with ``n_u``."""
    return rng.standard_normal(shape) / np.sqrt(shape[-1])


def cond_estimate(params: Iterable, l: int, input_sampler: Optional[Callable] = None,
                  n_samples: int = 100_000, seed: int = 0, root: bool = False,
                  chunk: int = 10_000) -> float:
    """Empirical condition number of the prediction map along supplied parameter points.

    For each parameter point and each output time ``t`` the ratio
    ``E||y_t||^4 / (E||y_t||^2)^2`` is estimated by Monte Carlo; the maximum
    over points and times is returned. This is the hypercontractivity
    constant, 3 for a scalar Gaussian prediction. ``root=True`` returns the
    square root of the fourth moment instead, ``sqrt(E||y_t||^4) / E||y_t||^2``.

    ``params`` may be a single object or an iterable of objects exposing
    ``markov(...)``: :class:`~lowsysid.solvers.SpParams`,
    :class:`~lowsysid.solvers.FactorPair` or a :class:`MarkovSequence`.
    Samples are drawn in fixed-size chunks from per-chunk streams, so the
    estimate does not depend on evaluation order.
    """
    from .system import stream

    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    sampler = input_sampler or gaussian_inputs
    if isinstance(params, (MarkovSequence,)) or hasattr(params, "markov"):
        params = [params]
    best = -np.inf
    for p in params:
        k = _as_markov(p, l)
        g = toeplitz_blocks(k.blocks)
        t, n_y, n_u = 2 * (k.l + 1), k.n_y, k.n_u
        m2 = np.zeros(t)
        m4 = np.zeros(t)
        done, idx = 0, 0
        while done < n_samples:
            size = min(chunk, n_samples - done)
            u = np.asarray(sampler(stream(seed, 7, idx), (size, t, n_u)), dtype=float)
            y = (u.reshape(size, t * n_u) @ g.T).reshape(size, t, n_y)
            sq = np.sum(y * y, axis=2)
            m2 += sq.sum(axis=0)
            m4 += (sq * sq).sum(axis=0)
            done += size
            idx += 1
        m2 /= n_samples
        m4 /= n_samples
        active = m2 > 1e-300
        if not np.any(active):
            continue
        ratio = np.sqrt(m4[active]) / m2[active] if root else m4[active] / m2[active] ** 2
        best = max(best, float(ratio.max()))
    if not np.isfinite(best):
        raise ValueError("prediction is identically zero; condition number undefined")
    return best


def _as_markov(p, l: int) -> MarkovSequence:
    if isinstance(p, MarkovSequence):
        return p
    try:
        return p.markov(l)
    except TypeError:
        return p.markov()
