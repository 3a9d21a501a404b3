"""Parameter estimation for ODE and PDE models with a Q-learning-driven,
level-based particle swarm (DERLPSO) and its RLLPSO baseline."""

from .errors import ConfigError, SingularSystem, SolverFailure
from .estimator import EstimationResult, run_derlpso, run_rllpso
from .ode import IntegratorConfig, OdeKind, OdeSystem, TimeGrid, integrate
from .problems import EQUATIONS, Problem, evaluate_loss, make_problem
from .qlearning import RLConfig
from .swarm import SwarmConfig

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EQUATIONS",
    "EstimationResult",
    "IntegratorConfig",
    "OdeKind",
    "OdeSystem",
    "Problem",
    "RLConfig",
    "SingularSystem",
    "SolverFailure",
    "SwarmConfig",
    "TimeGrid",
    "evaluate_loss",
    "integrate",
    "make_problem",
    "run_derlpso",
    "run_rllpso",
]
