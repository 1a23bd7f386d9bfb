"""Helpers shared by the iterative solvers."""
from __future__ import annotations

import numpy as np


def curvature(grad, x: np.ndarray, v0: np.ndarray | None = None, iters: int = 8,
              seed: int = 0) -> tuple[float, np.ndarray]:
    """Largest absolute Hessian eigenvalue of a smooth function, by power iteration on
    finite-difference Hessian-vector products. Returns ``(estimate, vector)`` so the
    vector can warm-start the next call."""
    g0 = grad(x)
    if v0 is None or v0.shape != x.shape or not np.any(v0):
        v0 = np.random.default_rng(seed).standard_normal(x.shape)
    v = v0 / np.linalg.norm(v0)
    eps = 1e-6 * (1.0 + np.linalg.norm(x))
    est = 0.0
    for _ in range(iters):
        hv = (grad(x + eps * v) - g0) / eps
        est = float(np.linalg.norm(hv))
        if est == 0.0 or not np.isfinite(est):
            break
        v = hv / est
    return est, v


def check_finite(value: float) -> bool:
    return bool(np.isfinite(value))


_MIN_LR = 1e-30
_STALL_WINDOW = 100
_STALL_RTOL = 1e-14


class HeavyBall:
    """Polyak heavy-ball iterations with function-value restart.

    A step that raises the objective is rejected. If momentum was active it
    is reset (the next step is a plain gradient step); if the rejected step
    was already a plain gradient step, the step size is halved.

    Parameters
    ----------
    lr : float or ndarray
        Initial step size, scalar or one per coordinate.
    momentum : float
        Momentum coefficient.
    x, value, grad : ndarray, float, ndarray
        Starting point with its objective value and gradient.
    project : callable, optional
        Applied to every trial point (e.g. clipping onto a box).

    Notes
    -----
    ``stalled`` becomes true when a window of 100 accepted steps lowers the
    objective by less than ``1e-14`` relative, i.e. the iterate is
    stationary to working precision.
    """

    def __init__(self, lr: float, momentum: float, x: np.ndarray, value: float, grad: np.ndarray,
                 project=None):
        self.lr = lr if np.ndim(lr) else float(lr)
        self.momentum = float(momentum)
        self.x = x
        self.x_prev = x.copy()
        self.value = float(value)
        self.grad = grad
        self.project = project
        self.restarts = 0
        self.halvings = 0
        self._steps = 0
        self._anchor = float(value)
        self.stalled = False

    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))

    def reset(self, x: np.ndarray, value: float, grad: np.ndarray):
        """Replace the iterate (e.g. after pruning) and drop the momentum."""
        self.x, self.x_prev, self.value, self.grad = x, x.copy(), float(value), grad
        self._anchor, self.stalled = float(value), False

    def step(self, value_grad) -> bool:
        """One trial step. Returns ``False`` when the step size has underflowed without progress."""
        while True:
            trial = self.x - self.lr * self.grad + self.momentum * (self.x - self.x_prev)
            if self.project is not None:
                trial = self.project(trial)
            f, g = value_grad(trial)
            if np.isfinite(f) and f <= self.value and np.all(np.isfinite(g)):
                self.x_prev, self.x, self.value, self.grad = self.x, trial, float(f), g
                self._steps += 1
                if self._steps % _STALL_WINDOW == 0:
                    gain = self._anchor - self.value
                    self.stalled = gain <= _STALL_RTOL * max(abs(self.value), 1e-300)
                    self._anchor = self.value
                return True
            if np.any(self.x != self.x_prev):
                self.x_prev = self.x.copy()
                self.restarts += 1
            else:
                self.lr *= 0.5
                self.halvings += 1
                if np.max(self.lr) < _MIN_LR:
                    return False
