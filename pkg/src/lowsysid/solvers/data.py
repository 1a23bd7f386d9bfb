"""Precomputed regression views of a rollout batch."""
from __future__ import annotations

import numpy as np

from ..system import RolloutBatch, reversed_prefix


class FinalOutputData:
    """Final-output regression ``y_T ~ sum_t K_t u_{T-t}`` used by the Hankel programs."""

    def __init__(self, batch: RolloutBatch):
        self.batch = batch
        self.l, self.n, self.n_y, self.n_u = batch.l, batch.n, batch.n_y, batch.n_u
        self.x = reversed_prefix(batch)
        self.y = np.ascontiguousarray(batch.outputs[:, -1, :])
        self.gram = self.x.T @ self.x / self.n
        self.cross = self.y.T @ self.x / self.n
        self.lipschitz = float(np.linalg.eigvalsh(self.gram)[-1])

    def residual(self, flat: np.ndarray) -> np.ndarray:
        return self.y - self.x @ flat.T

    def loss(self, flat: np.ndarray) -> float:
        r = self.residual(flat)
        return 0.5 * float(np.sum(r * r)) / self.n

    def grad(self, flat: np.ndarray) -> np.ndarray:
        """Gradient of the data term with respect to ``[K_1 ... K_{2L+1}]``."""
        return flat @ self.gram - self.cross

    def correlation(self, flat: np.ndarray) -> np.ndarray:
        """``(1/N) sum_i r_i x_i^T`` (negative data gradient)."""
        return self.cross - flat @ self.gram


class TrajectoryData:
    """Full-trajectory view used by the system-parameter program."""

    def __init__(self, batch: RolloutBatch):
        self.batch = batch
        self.l, self.n, self.n_y, self.n_u = batch.l, batch.n, batch.n_y, batch.n_u
        self.u = np.ascontiguousarray(batch.inputs)
        self.y = np.ascontiguousarray(batch.outputs)
        self.u_flat = self.u.reshape(-1, self.n_u)
        self.y_flat = self.y.reshape(-1, self.n_y)
        self.scale = 1.0 / (4.0 * self.n * (self.l + 1))
        self.input_power = float(np.mean(self.u * self.u)) * self.n_u


def final_output_data(obj) -> FinalOutputData:
    return obj if isinstance(obj, FinalOutputData) else FinalOutputData(obj)


def trajectory_data(obj) -> TrajectoryData:
    return obj if isinstance(obj, TrajectoryData) else TrajectoryData(obj)
