"""The three identification programs: nuclear norm (nuc), Burer-Monteiro (bm), system parameters (sp)."""
from .bm import augment_factors, bm_gradient, bm_objective, bm_solve
from .init import balanced_factors, shared_init
from .nuc import nuc_data_grad, nuc_objective, nuc_solve, svt_prox
from .params import FactorPair, SolverConfig, SpParams
from .report import (BUDGET, CERTIFIED, CONVERGED, DIVERGED, RANK_CAP, TRACE_COLUMNS, DivergenceError,
                     SolveReport, TraceRow)
from .sp import augment_modes, sp_data_loss, sp_gradient, sp_objective, sp_solve

SOLVERS = {"nuc": nuc_solve, "bm": bm_solve, "sp": sp_solve}
