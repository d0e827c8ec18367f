"""Singular radial solutions of the critical biharmonic equation via Emden-Fowler shooting."""

from .params import DomainError, ProblemParams, make_generic_params, make_params
from .dynamics import PhaseState, energy, homoclinic, rhs
from .integrator import IntegrationConfig, Trajectory, integrate
from .shooting import (BracketFailed, ShotKind, ValidationFailed, classify_shot,
                       find_beta_star)
from .family import (PeriodDetectionFailed, PeriodicSolution, extract_periodic,
                     reconstruct_u, second_order_oracle, solve_member, sweep_family)

__version__ = "0.1.0"
