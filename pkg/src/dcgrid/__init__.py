"""Small-signal stability analysis of a droop-regulated single-bus dc grid."""

from .equilibrium import Equilibrium, solve_equilibrium
from .errors import (BatteryOverload, ConfigError, ConvergenceFailure, DcGridError,
                     DegenerateDroop, NoFeasibleTau, NoPhysicalRoot, NotAtEquilibrium,
                     SingularState)
from .linearization import JacobianMatrix, analytic_jacobian, numeric_jacobian
from .model import (ControlParams, EssParams, MicrogridParams, PerUnitScaling,
                    StateVector, eval_rhs, to_per_unit)
from .simulator import (Classification, SimControls, SimVerdict, Trajectory, classify,
                        simulate, step_load)
from .stability import StabilityReport, assess, eigenvalues
from .sweep import (Criterion, MinCapResult, SweepGrid, min_capacitance, rmax_map,
                    tune_tau)

__all__ = [
    "BatteryOverload", "Classification", "ConfigError", "ControlParams",
    "ConvergenceFailure", "Criterion", "DcGridError", "DegenerateDroop", "Equilibrium",
    "EssParams", "JacobianMatrix", "MicrogridParams", "MinCapResult", "NoFeasibleTau",
    "NoPhysicalRoot", "NotAtEquilibrium", "PerUnitScaling", "SimControls", "SimVerdict",
    "SingularState", "StabilityReport", "StateVector", "SweepGrid", "Trajectory",
    "analytic_jacobian", "assess", "classify", "eigenvalues", "eval_rhs",
    "min_capacitance", "numeric_jacobian", "rmax_map", "simulate", "solve_equilibrium",
    "step_load", "to_per_unit", "tune_tau",
]
