"""Common starting point for the three programs."""
from __future__ import annotations

import numpy as np

from ..linops import MarkovSequence, hankel_blocks
from ..system import stream
from .params import FactorPair, SpParams

_INIT_STREAM = 11


def balanced_factors(k: MarkovSequence, rank: int) -> FactorPair:
    """Rank-``rank`` balanced SVD factors ``(U sqrt(S), W sqrt(S))`` of the Hankel matrix of ``k``."""
    u, s, vt = np.linalg.svd(hankel_blocks(k.blocks), full_matrices=False)
    v = np.zeros((u.shape[0], rank))
    z = np.zeros((vt.shape[1], rank))
    m = min(rank, s.size)
    root = np.sqrt(s[:m])
    v[:, :m] = u[:, :m] * root
    z[:, :m] = vt[:m].T * root
    return FactorPair(v, z, k.n_y, k.n_u)


def shared_init(batch, cfg, r_init: int | None = None):
    """Initial ``(MarkovSequence, FactorPair, SpParams)`` sharing one impulse response.

    Poles are uniform on ``[-0.5, 0.5]``; ``b_j`` and ``c_j`` are Gaussian
    with scale 0.1. The Hankel factors are the balanced SVD factors of the
    resulting Markov sequence, which has rank at most ``r_init``.
    """
    r = cfg.r_init if r_init is None else r_init
    if r < 1:
        raise ValueError("r_init must be >= 1")
    rng = stream(cfg.seed, _INIT_STREAM)
    a = rng.uniform(-0.5, 0.5, size=r)
    b = 0.1 * rng.standard_normal((r, batch.n_u))
    c = 0.1 * rng.standard_normal((batch.n_y, r))
    sp = SpParams(a, b, c)
    markov = sp.markov(batch.l)
    return markov, balanced_factors(markov, r), sp
