"""Solver traces, reports and the budget clock."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..linops import ImpulseResponse, MarkovSequence
from ..metrics import recovery_error
from ..system import LinearSystem

CERTIFIED = "certified-global"
RANK_CAP = "rank-cap-reached"
BUDGET = "budget-exhausted"
CONVERGED = "converged"
DIVERGED = "diverged"

TRACE_COLUMNS = ("iter", "wall_clock_s", "loss", "recovery_error", "polar", "rank")
NAN = float("nan")


@dataclass
class TraceRow:
    iter: int
    wall_clock_s: float
    loss: float
    recovery_error: float = NAN
    polar: float = NAN
    rank: int = 0

    def values(self):
        return (self.iter, self.wall_clock_s, self.loss, self.recovery_error, self.polar, self.rank)


@dataclass
class SolveReport:
    method: str
    trace: list
    final_markov: MarkovSequence
    final_sys: LinearSystem
    certificate: str
    effective_rank: int = 0
    final_polar: float = NAN
    checkpoints: list = field(default_factory=list)
    message: str = ""

    @property
    def final_rank(self) -> int:
        return self.trace[-1].rank if self.trace else 0

    @property
    def total_time_s(self) -> float:
        return self.trace[-1].wall_clock_s if self.trace else 0.0

    @property
    def iterations(self) -> int:
        return self.trace[-1].iter if self.trace else 0

    def final_recovery_error(self) -> float:
        for row in reversed(self.trace):
            if not math.isnan(row.recovery_error):
                return row.recovery_error
        return NAN


class DivergenceError(RuntimeError):
    """Raised when a solver produces a non-finite objective; carries the partial report."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class Clock:
    """Accumulates time spent in solver steps only."""

    def __init__(self, budget_s: Optional[float] = None):
        self.budget_s = budget_s
        self.elapsed = 0.0
        self._start = None

    def start(self):
        self._start = time.perf_counter()

    def stop(self):
        if self._start is not None:
            self.elapsed += time.perf_counter() - self._start
            self._start = None

    def exhausted(self) -> bool:
        if self.budget_s is None:
            return False
        running = 0.0 if self._start is None else time.perf_counter() - self._start
        return self.elapsed + running >= self.budget_s


class Recorder:
    """Collects trace rows; metric evaluation runs with the clock paused.

    Markov checkpoints are thinned to at most ``max_checkpoints`` entries.
    """

    def __init__(self, clock: Clock, truth: Optional[ImpulseResponse], eval_every: int,
                 impulse: Callable[[], ImpulseResponse], markov: Callable[[], MarkovSequence],
                 max_checkpoints: int = 200):
        self.clock = clock
        self.truth = truth
        self.eval_every = eval_every
        self.impulse = impulse
        self.markov = markov
        self.max_checkpoints = max_checkpoints
        self.rows: list = []
        self.checkpoints: list = []

    def due(self, it: int) -> bool:
        return it % self.eval_every == 0

    def record(self, it: int, loss, rank: int, polar: float = NAN, checkpoint: bool = True) -> float:
        """Append a row; ``loss`` may be a callable, evaluated off the clock."""
        self.clock.stop()
        if callable(loss):
            loss = float(loss())
        err = NAN
        if self.truth is not None:
            err = recovery_error(self.impulse(), self.truth)
        if checkpoint:
            self.checkpoints.append((it, self.markov()))
            if len(self.checkpoints) > self.max_checkpoints:
                self.checkpoints = self.checkpoints[:-1:2] + self.checkpoints[-1:]
        self.rows.append(TraceRow(it, self.clock.elapsed, loss, err, polar, rank))
        self.clock.start()
        return loss
