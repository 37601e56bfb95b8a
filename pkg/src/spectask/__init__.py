"""spectask: task-structure and transition-cost learning from demonstrations.

Pipeline: generate scored demonstrations in labeled gridworlds, learn a
weighted finite automaton for the task from their symbol words (Hankel
matrix + truncated SVD), then fit a transition-cost model by descending the
Boltzmann-policy log-likelihood through a shortest-path planner on the
product of gridworld and automaton.
"""

from .automaton import Wfa, WfaState, accepts, initial_state, load_wfa, save_wfa, score
from .core import Demonstration, compress, concat, load_demos, save_demos
from .gridworld import GridState, TaskSpec, generate_env, label, step, success
from .hankel import Basis, HankelBlocks, build_hankel, select_basis
from .irl import TrainConfig, boltzmann, nll_loss, train
from .planner import PlanLimits, PlanResult, ProductPlanner, UnreachableError
from .spectral import SpectralConfig, spectral_learn, wfa_fit_loss

__all__ = [
    "Basis",
    "Demonstration",
    "GridState",
    "HankelBlocks",
    "PlanLimits",
    "PlanResult",
    "ProductPlanner",
    "SpectralConfig",
    "TaskSpec",
    "TrainConfig",
    "UnreachableError",
    "Wfa",
    "WfaState",
    "accepts",
    "boltzmann",
    "build_hankel",
    "compress",
    "concat",
    "generate_env",
    "initial_state",
    "label",
    "load_demos",
    "load_wfa",
    "nll_loss",
    "save_demos",
    "save_wfa",
    "score",
    "select_basis",
    "spectral_learn",
    "step",
    "success",
    "train",
    "wfa_fit_loss",
]

__version__ = "0.1.0"
