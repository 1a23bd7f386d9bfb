"""Burer-Monteiro factorization of the Hankel matrix with polar-driven rank augmentation."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .. import certificates
from ..linops import (ImpulseResponse, MarkovSequence, extract_adjoint_blocks, extract_blocks,
                      flat_blocks, impulse_from_markov, unflat_blocks)
from ..realization import extract_from_factors
from ..system import LinearSystem
from .common import HeavyBall, curvature
from .data import final_output_data
from .linesearch import amplitude_search
from .params import FactorPair, SolverConfig
from .report import (BUDGET, CERTIFIED, CONVERGED, DIVERGED, RANK_CAP, Clock, DivergenceError, Recorder,
                     SolveReport)

_LR_REFRESH = 50


def _markov_flat(v, z, ny, nu):
    return flat_blocks(extract_blocks(v @ z.T, ny, nu))


def _hankel_grad(v, z, data):
    """Gradient of the data term with respect to ``X = V Z^T``."""
    g = data.grad(_markov_flat(v, z, data.n_y, data.n_u))
    return extract_adjoint_blocks(unflat_blocks(g, data.n_u))


def bm_objective(f: FactorPair, batch, lam: float) -> float:
    """Final-output least squares on the averaged Hankel factors plus ``(lambda/2)(||V||^2 + ||Z||^2)``."""
    data = final_output_data(batch)
    if f.l != data.l or (f.n_y, f.n_u) != (data.n_y, data.n_u):
        raise ValueError("factors do not match the batch dimensions")
    reg = 0.5 * lam * (float(np.sum(f.v * f.v)) + float(np.sum(f.z * f.z)))
    return data.loss(_markov_flat(f.v, f.z, f.n_y, f.n_u)) + reg


def bm_gradient(f: FactorPair, batch, lam: float) -> tuple[np.ndarray, np.ndarray]:
    data = final_output_data(batch)
    w = _hankel_grad(f.v, f.z, data)
    return w @ f.z + lam * f.v, w.T @ f.v + lam * f.z


def augment_factors(f: FactorPair, batch, lam: float, polar: certificates.PolarResult):
    """Append ``(tau v*, tau z*)`` with ``tau`` from a 1-D search on the full objective.

    Returns ``(new factors, objective before, objective after)``.
    """
    data = final_output_data(batch)
    vs, zs = polar.left[:, None], polar.right[:, None]

    def phi(t):
        tau = math.sqrt(t)
        return bm_objective(FactorPair(np.hstack([f.v, tau * vs]), np.hstack([f.z, tau * zs]),
                                       f.n_y, f.n_u), data, lam)

    scale = 1e-2 * (1.0 + float(np.linalg.norm(f.v) * np.linalg.norm(f.z)))
    t, after = amplitude_search(phi, scale)
    tau = math.sqrt(t)
    new = FactorPair(np.hstack([f.v, tau * vs]), np.hstack([f.z, tau * zs]), f.n_y, f.n_u)
    return new, phi(0.0), after


def bm_solve(batch, cfg: SolverConfig, init: FactorPair,
             truth: Optional[ImpulseResponse] = None) -> SolveReport:
    """Polyak-momentum descent on ``(V, Z)``; after each inner loop the polar is checked.

    A polar at most ``1 + polar_tol`` certifies global optimality; otherwise
    the top singular pair of the polar witness is appended (rank + 1) until
    ``r_max``.
    """
    data = final_output_data(batch)
    ny, nu = data.n_y, data.n_u
    if init.l != data.l or (init.n_y, init.n_u) != (ny, nu):
        raise ValueError("initial factors do not match the batch dimensions")
    v, z = np.array(init.v), np.array(init.z)
    state = {"v": v, "z": z}

    def factors():
        return FactorPair(state["v"], state["z"], ny, nu)

    def objective():
        return bm_objective(factors(), data, cfg.lam)

    def v_size(r):
        return (data.l + 1) * ny * r

    def unpack(x, r):
        return x[: v_size(r)].reshape(-1, r), x[v_size(r):].reshape(-1, r)

    def data_grad_vec(x):
        r = x.size // ((data.l + 1) * (ny + nu))
        vv, zz = unpack(x, r)
        w = _hankel_grad(vv, zz, data)
        return np.concatenate([(w @ zz).ravel(), (w.T @ vv).ravel()])

    def value_grad(x, r):
        vv, zz = unpack(x, r)
        flat = _markov_flat(vv, zz, ny, nu)
        value = data.loss(flat) + 0.5 * cfg.lam * float(x @ x)
        w = extract_adjoint_blocks(unflat_blocks(data.grad(flat), nu))
        return value, np.concatenate([(w @ zz).ravel(), (w.T @ vv).ravel()]) + cfg.lam * x

    probe = {"vec": None}

    def step_size(x):
        if cfg.lr is not None:
            return cfg.lr
        est, probe["vec"] = curvature(data_grad_vec, x, probe["vec"], seed=cfg.seed)
        return 1.0 / (est + cfg.lam)

    clock = Clock(cfg.time_budget_s)
    rec = Recorder(clock, truth, cfg.eval_every, lambda: impulse_from_markov(factors().markov()),
                   lambda: factors().markov())
    clock.start()
    loss = rec.record(0, objective, v.shape[1])
    status, it, final_polar, message = BUDGET, 0, math.nan, ""
    total_cap = cfg.max_total_iter
    stop = False
    while not stop:
        r = v.shape[1]
        x = np.concatenate([v.ravel(), z.ravel()])
        fx, gx = value_grad(x, r)
        if not math.isfinite(fx):
            clock.stop()
            raise DivergenceError(f"bm diverged at iteration {it}", _report(rec, v, z, ny, nu, DIVERGED, cfg))
        descent = HeavyBall(step_size(x), cfg.momentum, x, fx, gx)
        stationary = False
        for inner in range(cfg.max_iter):
            if descent.stalled or descent.grad_norm() < cfg.stat_tol * (1.0 + abs(descent.value)):
                stationary = True
                break
            it += 1
            if not descent.step(lambda y: value_grad(y, r)):
                clock.stop()
                v, z = unpack(descent.x, r)
                raise DivergenceError(f"bm diverged at iteration {it}", _report(rec, v, z, ny, nu, DIVERGED, cfg))
            v, z = unpack(descent.x, r)
            state["v"], state["z"] = v, z
            if cfg.lr is None and inner % _LR_REFRESH == _LR_REFRESH - 1:
                descent.lr = step_size(descent.x)
            if rec.due(it):
                loss = rec.record(it, descent.value, r)
            if clock.exhausted() or (total_cap is not None and it >= total_cap):
                stop = True
                break
        if cfg.lam == 0:
            # no certificate without regularization
            loss = rec.record(it, objective, v.shape[1])
            status = CONVERGED if stationary else BUDGET
            break
        f = factors()
        polar = certificates.polar_bm(f, data, cfg.lam)
        final_polar = polar.value
        loss = rec.record(it, objective, v.shape[1], polar.value)
        if stop:
            break
        if polar.value <= 1.0 + cfg.polar_tol:
            status = CERTIFIED
            break
        if v.shape[1] >= cfg.r_max:
            status = RANK_CAP
            break
        new, before, after = augment_factors(f, data, cfg.lam, polar)
        if not after < before:
            message = "augmentation found no decrease"
            break
        v, z = new.v, new.z
        state["v"], state["z"] = v, z
        loss = rec.record(it, after, v.shape[1])
    clock.stop()
    report = _report(rec, v, z, ny, nu, status, cfg)
    report.final_polar = final_polar
    report.message = message
    return report


def _report(rec, v, z, ny, nu, status, cfg) -> SolveReport:
    f = FactorPair(v, z, ny, nu)
    markov = f.markov()
    sv = np.linalg.svd(v @ z.T, compute_uv=False)
    eff = int(np.sum(sv > cfg.rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    if f.l >= 1:
        sys = extract_from_factors(v, z, ny, nu)
    else:
        sys = LinearSystem.zero(nu, ny)
    return SolveReport("bm", rec.rows, markov, sys, status, eff, checkpoints=rec.checkpoints)
