"""Low-order linear system identification from finite input/output rollouts."""
from .kernels import BACKEND
from .linops import (HankelMatrix, ImpulseResponse, MarkovSequence, gamma, hankel_adjoint_sum,
                     hankel_extract, hankel_map, impulse_from_markov, impulse_response, shift_power_matrix)
from .system import GenConfig, LinearSystem, RolloutBatch, generate, simulate, stack_targets

__version__ = "0.1.0"
