"""Average-consensus update rules over dynamic graphs, with learned degree bounds."""

from .engine import FixedWeight, Trace, run_agents, run_matrix, traces_agree
from .graph import (DegreeBurst, Graph, RandomConnected, RotatingStar, Schedule, Static,
                    generate, validate_class_g)
from .rules import (LearningState, equal_neighbor_matrix, fixed_weight_matrix, max_metropolis_step,
                    max_weight_step, metropolis_matrix, metropolis_symmetrize)

__version__ = "0.1.0"

__all__ = [
    "DegreeBurst", "FixedWeight", "Graph", "LearningState", "RandomConnected", "RotatingStar", "Schedule",
    "Static", "Trace", "equal_neighbor_matrix", "fixed_weight_matrix", "generate", "max_metropolis_step",
    "max_weight_step", "metropolis_matrix", "metropolis_symmetrize", "run_agents", "run_matrix",
    "traces_agree", "validate_class_g",
]
