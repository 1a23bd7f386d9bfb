"""Direct optimization over diagonal-system parameters with the atomic-norm regularizer."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .. import certificates, kernels
from ..linops import ImpulseResponse, gamma, gamma_grad, impulse_response
from .common import HeavyBall, curvature
from .data import trajectory_data
from .linesearch import amplitude_search
from .params import SolverConfig, SpParams
from .report import (BUDGET, CERTIFIED, CONVERGED, DIVERGED, RANK_CAP, Clock, DivergenceError, Recorder,
                     SolveReport)

_LR_REFRESH = 50
_PRUNE_NORM = 1e-12
_PRUNE_AFTER = 50
_DIAG_FLOOR = 1e-6


def _forward(a, b, c, data):
    """Modal sequences ``s`` (r, N, T) and residual (N*T, n_y)."""
    n, t = data.n, data.u.shape[1]
    q = np.ascontiguousarray((b @ data.u_flat.T).reshape(b.shape[0], n, t))
    s = kernels.causal_filter(q, a)
    return s, data.y_flat - s.reshape(s.shape[0], -1).T @ c.T


def regularizer(a, b, c, l) -> float:
    nb = np.linalg.norm(b, axis=1)
    nc = np.linalg.norm(c, axis=0)
    return float(sum(gamma(aj, l) * x * y for aj, x, y in zip(a, nb, nc)))


def sp_data_loss(p: SpParams, batch) -> float:
    data = trajectory_data(batch)
    _, r = _forward(p.a, p.b_rows, p.c_cols, data)
    return data.scale * float(np.sum(r * r))


def sp_objective(p: SpParams, batch, lam: float) -> float:
    """``(1/4N(L+1)) sum_i ||Y_i - sum_j c_j b_j^T U_i P(a_j)^T||^2 + lambda sum_j gamma(a_j) ||b_j|| ||c_j||``."""
    data = trajectory_data(batch)
    if (p.n_u, p.n_y) != (data.n_u, data.n_y):
        raise ValueError("parameters do not match the batch dimensions")
    return sp_data_loss(p, data) + lam * regularizer(p.a, p.b_rows, p.c_cols, data.l)


def _data_grads(a, b, c, data):
    """Data-term gradients and the squared residual norm ``sum ||Y - prediction||^2``."""
    sse, ga, gb, gc = kernels.modal_terms(data.u, data.y, a, b, c)
    k2 = -2.0 * data.scale
    return k2 * ga, k2 * gb, k2 * gc, sse


def _gn_diagonal(a, b, c, data):
    """Diagonal of the Gauss-Newton matrix of the data term, in the packed ``(a, B, C)`` order.

    Each coordinate only sees its own mode, so the strongly coupled blocks of
    a mode with a large gain get proportionally small steps. ``b_j`` and
    ``c_j`` share one value, the sum of their mean diagonal entries:
    separate values would scale the ``b_j`` step by ``1/||c_j||^2`` and the
    ``c_j`` step by ``1/||b_j||^2``, which freezes the ratio of the two and
    lets a mode that starts with the wrong sign collapse into the saddle at
    ``b_j = c_j = 0``.
    """
    r = a.size
    n, t, nu = data.u.shape
    s = kernels.causal_filter(np.ascontiguousarray((b @ data.u_flat.T).reshape(r, n, t)), a)
    ds = kernels.causal_filter(s, a)  # d s / d a
    u_rep = np.broadcast_to(data.u.transpose(2, 0, 1)[None], (r, nu, n, t)).reshape(r * nu, n, t)
    w = kernels.causal_filter(np.ascontiguousarray(u_rep), np.repeat(a, nu))  # d s / d b
    nc2 = np.sum(c * c, axis=0)
    k = 2.0 * data.scale
    da = k * nc2 * np.sum(ds.reshape(r, -1) ** 2, axis=1)
    db = k * nc2[:, None] * np.sum(w.reshape(r, nu, -1) ** 2, axis=2)
    dc = k * np.broadcast_to(np.sum(s.reshape(r, -1) ** 2, axis=1)[None, :], (c.shape[0], r))
    shared = np.mean(db, axis=1) + np.mean(dc, axis=0)
    return np.concatenate([da, np.repeat(shared, nu), np.tile(shared, c.shape[0])])


def _reg_grads(a, b, c, l, lam):
    nb = np.linalg.norm(b, axis=1)
    nc = np.linalg.norm(c, axis=0)
    gam = np.array([gamma(x, l) for x in a])
    dgam = np.array([gamma_grad(x, l) for x in a])
    ub = np.divide(b, nb[:, None], out=np.zeros_like(b), where=nb[:, None] > 0)
    uc = np.divide(c, nc[None, :], out=np.zeros_like(c), where=nc[None, :] > 0)
    return lam * dgam * nb * nc, lam * (gam * nc)[:, None] * ub, lam * uc * (gam * nb)[None, :]


def sp_gradient(p: SpParams, batch, lam: float):
    """Gradient ``(d/da, d/dB, d/dC)`` of :func:`sp_objective` (subgradient 0 for zero norms)."""
    data = trajectory_data(batch)
    g_a, g_b, g_c, _ = _data_grads(p.a, p.b_rows, p.c_cols, data)
    r_a, r_b, r_c = _reg_grads(p.a, p.b_rows, p.c_cols, data.l, lam)
    return g_a + r_a, g_b + r_b, g_c + r_c


def augment_modes(p: SpParams, batch, lam: float, polar: certificates.PolarResult):
    """Append ``(a*, sqrt(t) c*, sqrt(t) b*)`` with ``t`` from a 1-D search. Returns ``(params, before, after)``."""
    data = trajectory_data(batch)
    a_star = float(polar.pole)

    def build(t):
        root = math.sqrt(t)
        return SpParams(np.append(p.a, a_star), np.vstack([p.b_rows, root * polar.right[None, :]]),
                        np.hstack([p.c_cols, root * polar.left[:, None]]))

    def phi(t):
        return sp_objective(build(t), data, lam)

    scale = 1e-2 * (1.0 + float(np.linalg.norm(p.b_rows) * np.linalg.norm(p.c_cols)))
    t, after = amplitude_search(phi, scale)
    return build(t), phi(0.0), after


def sp_solve(batch, cfg: SolverConfig, init: SpParams,
             truth: Optional[ImpulseResponse] = None) -> SolveReport:
    """Polyak-momentum descent on ``(a, B, C)`` with poles clipped to ``[-a_bound, a_bound]``.

    After each inner loop the polar ``sup_a ||M(a)||_2`` is evaluated by grid
    plus golden-section search; above ``1 + polar_tol`` the supremizing mode
    is appended. Modes whose ``b_j`` and ``c_j`` both stay below ``1e-12``
    for 50 iterations are dropped (the reported rank counts them).
    """
    data = trajectory_data(batch)
    ny, nu, l = data.n_y, data.n_u, data.l
    if (init.n_u, init.n_y) != (nu, ny):
        raise ValueError("initial parameters do not match the batch dimensions")
    a = np.clip(np.array(init.a), -cfg.a_bound, cfg.a_bound)
    b, c = np.array(init.b_rows), np.array(init.c_cols)
    state = {"p": (a, b, c), "nominal": init.r}

    def params():
        return SpParams(*state["p"])

    def objective():
        return sp_objective(params(), data, cfg.lam)

    def impulse():
        return impulse_response(params().system(), l) if params().r else _zero_impulse(l, ny, nu)

    def data_grad_vec(x, r):
        aa, bb, cc = _unpack(x, r, nu, ny)
        g_a, g_b, g_c, _ = _data_grads(aa, bb, cc, data)
        return np.concatenate([g_a, g_b.ravel(), g_c.ravel()])

    def value_grad(x, r):
        aa, bb, cc = _unpack(x, r, nu, ny)
        g_a, g_b, g_c, sse = _data_grads(aa, bb, cc, data)
        r_a, r_b, r_c = _reg_grads(aa, bb, cc, l, cfg.lam)
        g_a = g_a + r_a
        # a clipped pole only moves inward
        g_a = np.where((np.abs(aa) >= cfg.a_bound) & (np.sign(g_a) == -np.sign(aa)), 0.0, g_a)
        value = data.scale * sse + cfg.lam * regularizer(aa, bb, cc, l)
        return value, np.concatenate([g_a, (g_b + r_b).ravel(), (g_c + r_c).ravel()])

    def project(x, r):
        x = x.copy()
        x[:r] = np.clip(x[:r], -cfg.a_bound, cfg.a_bound)
        return x

    probe = {"vec": None}

    def step_size(x, r):
        """Per-coordinate step sizes: Gauss-Newton diagonal scaling, then one global curvature estimate."""
        if cfg.lr is not None:
            return cfg.lr
        if r == 0:
            return 1.0
        d = _gn_diagonal(*_unpack(x, r, nu, ny), data)
        d = np.maximum(d, _DIAG_FLOOR * max(float(d.max()), 1e-300))
        scale = 1.0 / np.sqrt(d)
        est, probe["vec"] = curvature(lambda y: scale * data_grad_vec(scale * y, r), x / scale,
                                      probe["vec"], seed=cfg.seed)
        return 1.0 / (est * d + cfg.lam * (l + 1))

    clock = Clock(cfg.time_budget_s)
    rec = Recorder(clock, truth, cfg.eval_every, impulse, lambda: params().markov(l))
    clock.start()
    loss = rec.record(0, objective, state["nominal"])
    status, it, final_polar, message = BUDGET, 0, math.nan, ""
    dead = np.zeros(a.size, dtype=int)
    stop = False

    def diverged(aa, bb, cc):
        clock.stop()
        return DivergenceError(f"sp diverged at iteration {it}",
                               _report(rec, aa, bb, cc, l, DIVERGED, state["nominal"]))

    while not stop:
        r = a.size
        x = np.concatenate([a, b.ravel(), c.ravel()])
        fx, gx = value_grad(x, r)
        if not math.isfinite(fx):
            raise diverged(a, b, c)
        descent = HeavyBall(step_size(x, r), cfg.momentum, x, fx, gx, lambda y: project(y, r))
        stationary = False
        for inner in range(cfg.max_iter):
            if descent.stalled or descent.grad_norm() < cfg.stat_tol * (1.0 + abs(descent.value)):
                stationary = True
                break
            it += 1
            if not descent.step(lambda y: value_grad(y, r)):
                raise diverged(*_unpack(descent.x, r, nu, ny))
            a, b, c = _unpack(descent.x, r, nu, ny)
            dead = np.where((np.linalg.norm(b, axis=1) < _PRUNE_NORM) & (np.linalg.norm(c, axis=0) < _PRUNE_NORM),
                            dead + 1, 0)
            if np.any(dead >= _PRUNE_AFTER):
                keep = dead < _PRUNE_AFTER
                a, b, c = a[keep], b[keep], c[:, keep]
                dead = dead[keep]
                r = a.size
                probe["vec"] = None
                x = np.concatenate([a, b.ravel(), c.ravel()])
                descent.reset(x, *value_grad(x, r))
                descent.project = lambda y, r=r: project(y, r)
            state["p"] = (a, b, c)
            if cfg.lr is None and inner % _LR_REFRESH == _LR_REFRESH - 1:
                descent.lr = step_size(descent.x, r)
            if rec.due(it):
                loss = rec.record(it, descent.value, state["nominal"])
            if clock.exhausted() or (cfg.max_total_iter is not None and it >= cfg.max_total_iter):
                stop = True
                break
        if cfg.lam == 0:
            # no certificate without regularization
            loss = rec.record(it, objective, state["nominal"])
            status = CONVERGED if stationary else BUDGET
            break
        p = params()
        polar = certificates.polar_sp(p, data, cfg.lam, cfg.a_bound, cfg.grid)
        final_polar = polar.value
        loss = rec.record(it, objective, state["nominal"], polar.value)
        if stop:
            break
        if polar.value <= 1.0 + cfg.polar_tol:
            status = CERTIFIED
            break
        if state["nominal"] >= cfg.r_max:
            status = RANK_CAP
            break
        new, before, after = augment_modes(p, data, cfg.lam, polar)
        if not after < before:
            message = "augmentation found no decrease"
            break
        a, b, c = new.a, new.b_rows, new.c_cols
        dead = np.append(dead, 0)
        probe["vec"] = None
        state["p"] = (a, b, c)
        state["nominal"] += 1
        loss = rec.record(it, after, state["nominal"])
    clock.stop()
    report = _report(rec, a, b, c, l, status, state["nominal"])
    report.final_polar = final_polar
    report.message = message
    return report


def _unpack(x, r, nu, ny):
    a = x[:r]
    b = x[r:r + r * nu].reshape(r, nu)
    c = x[r + r * nu:].reshape(ny, r)
    return a, b, c


def _zero_impulse(l, ny, nu):
    n = 2 * (l + 1)
    return ImpulseResponse(np.zeros((n * ny, n * nu)), l, ny, nu)


def _report(rec, a, b, c, l, status, nominal) -> SolveReport:
    from ..system import LinearSystem

    p = SpParams(a, b, c)
    if p.r:
        sys = p.system()
    else:
        sys = LinearSystem.zero(p.n_u, p.n_y)
    return SolveReport("sp", rec.rows, p.markov(l), sys, status, p.r, checkpoints=rec.checkpoints)
