"""Structure-preserving sampled-data simulation of implicit port-Hamiltonian systems."""

from ._backend import BACKEND
from .control import DampingSource, SequenceSource, ZeroSource, damping_source, sequence_source
from .errors import (AssumptionViolation, ConfigError, EvaluationError, InputError, PHDAEError,
                     SolverError, StepFailure, UnsupportedOperation)
from .flows import (DRIFT, KICK, UnconstrainedMethod, adjoint, compose, drift, kick,
                    stormer_verlet, symmetrize, symplectic_euler)
from .projection import (MultiplierSolution, NewtonConfig, projection_map,
                         solve_momentum_multiplier, solve_position_multiplier)
from .stepper import (IntegratorConfig, StepResult, Trajectory, constrained_step,
                      power_balance_audit, simulate)
from .system import (ImplicitPHSystem, State, check_assumptions, check_callbacks,
                     continuous_multipliers, energy, hidden_constraint, multiplier_matrix, output)

__version__ = "0.1.0"
