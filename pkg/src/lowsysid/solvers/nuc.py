"""Hankel nuclear-norm minimization by accelerated proximal gradient."""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..linops import (ImpulseResponse, MarkovSequence, extract_blocks, flat_blocks, hankel_blocks,
                      impulse_from_markov, unflat_blocks)
from ..realization import ho_kalman
from .data import final_output_data
from .params import SolverConfig
from .report import (BUDGET, CONVERGED, DIVERGED, Clock, DivergenceError, Recorder, SolveReport)


def nuc_objective(h: MarkovSequence, batch, lam: float) -> float:
    """Final-output least squares plus ``lambda ||H(K)||_*``."""
    data = final_output_data(batch)
    if (h.l, h.n_y, h.n_u) != (data.l, data.n_y, data.n_u):
        raise ValueError("Markov sequence does not match the batch dimensions")
    sv = np.linalg.svd(hankel_blocks(h.blocks), compute_uv=False)
    return data.loss(h.flat()) + lam * float(sv.sum())


def nuc_data_grad(h: MarkovSequence, batch) -> MarkovSequence:
    data = final_output_data(batch)
    return MarkovSequence(unflat_blocks(data.grad(h.flat()), data.n_u))


def svt_prox(blocks: np.ndarray, threshold: float) -> tuple[np.ndarray, int]:
    """Shrink the Hankel singular values by ``threshold`` (clamped at zero) and average back to blocks.

    Returns the new blocks and the number of surviving singular values.
    """
    _, ny, nu = blocks.shape
    u, s, vt = np.linalg.svd(hankel_blocks(blocks), full_matrices=False)
    s = np.maximum(s - threshold, 0.0)
    keep = s > 0
    return extract_blocks((u[:, keep] * s[keep]) @ vt[keep], ny, nu), int(keep.sum())


def nuc_solve(batch, cfg: SolverConfig, init: MarkovSequence,
              truth: Optional[ImpulseResponse] = None) -> SolveReport:
    """Accelerated proximal gradient with constant momentum.

    Each step extrapolates ``Y = K_k + mu (K_k - K_{k-1})``, takes a gradient
    step on the data term and applies singular-value thresholding to the
    Hankel matrix. Stops when the gradient-mapping norm drops below
    ``stat_tol (1 + best recorded loss)``, at ``max_iter`` or at the time budget.
    """
    data = final_output_data(batch)
    if (init.l, init.n_y, init.n_u) != (data.l, data.n_y, data.n_u):
        raise ValueError("initial Markov sequence does not match the batch dimensions")
    lr = cfg.lr if cfg.lr is not None else 1.0 / max(data.lipschitz, 1e-300)
    nu = data.n_u
    k = np.array(init.blocks)
    k_prev = k.copy()
    state = {"k": k, "rank": 0}

    def current():
        return MarkovSequence(state["k"])

    def objective():
        return nuc_objective(current(), data, cfg.lam)

    clock = Clock(cfg.time_budget_s)
    rec = Recorder(clock, truth, cfg.eval_every, lambda: impulse_from_markov(current()), current)
    clock.start()
    loss = rec.record(0, objective, 0)
    best = loss  # stationarity scale; the current loss would excuse a blow-up
    status = BUDGET
    it = 0
    for it in range(1, cfg.max_iter + 1):
        y = k + cfg.momentum * (k - k_prev)
        fy = flat_blocks(y)
        step = fy - lr * data.grad(fy)
        k_new, state["rank"] = svt_prox(unflat_blocks(step, nu), lr * cfg.lam)
        mapping = np.linalg.norm(k_new - y) / lr
        if not np.isfinite(mapping):
            clock.stop()
            raise DivergenceError(f"nuc diverged at iteration {it}", _report(rec, k, cfg, DIVERGED))
        k_prev, k = k, k_new
        state["k"] = k
        done = mapping < cfg.stat_tol * (1.0 + abs(best))
        if rec.due(it) or done:
            loss = rec.record(it, objective, state["rank"])
            if not np.isfinite(loss):
                clock.stop()
                raise DivergenceError(f"nuc diverged at iteration {it}", _report(rec, k, cfg, DIVERGED))
            best = min(best, loss)
        if done:
            status = CONVERGED
            break
        if clock.exhausted():
            break
    if rec.rows[-1].iter != it:
        rec.record(it, objective, state["rank"])
    clock.stop()
    return _report(rec, k, cfg, status, state["rank"])


def _report(rec: Recorder, k: np.ndarray, cfg: SolverConfig, status: str, rank: int = 0) -> SolveReport:
    """Final report; the realization order is the thresholding rank when one is known."""
    markov = MarkovSequence(k) if np.all(np.isfinite(k)) else MarkovSequence(np.zeros_like(k))
    real = None
    if markov.l >= 1 and np.any(markov.blocks):
        real = ho_kalman(markov, cfg.rank_tol, order=rank if rank > 0 else None)
    if real is None:
        from ..system import LinearSystem
        sys, order = LinearSystem.zero(markov.n_u, markov.n_y), 0
    else:
        sys, order = real.sys, real.order
    return SolveReport("nuc", rec.rows, markov, sys, status, order, checkpoints=rec.checkpoints)
