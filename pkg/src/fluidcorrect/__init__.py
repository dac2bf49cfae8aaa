"""Two-stage staffing of multi-class service networks and decision-corrected arrival rates."""

__version__ = "0.1.0"

from .correction import CorrectionResult, run_algorithm1
from .decomposable import hybrid_solve
from .demand import DemandScenarioSet, generate_synthetic_weeks, load_csv, save_csv
from .estimators import DecisionCorrector, FluidStaffing, HybridCorrector, SAAStaffing
from .evaluation import ExperimentConfig, evaluate, run_experiment
from .existence import membership_in_b, universal_existence
from .network import ServiceNetwork, load_network, save_network
from .twostage import expected_cost, second_stage, solve_fluid, solve_saa, verify_kkt

__all__ = [
    "__version__",
    "CorrectionResult",
    "DecisionCorrector",
    "DemandScenarioSet",
    "ExperimentConfig",
    "FluidStaffing",
    "HybridCorrector",
    "SAAStaffing",
    "ServiceNetwork",
    "evaluate",
    "expected_cost",
    "generate_synthetic_weeks",
    "hybrid_solve",
    "load_csv",
    "load_network",
    "membership_in_b",
    "run_algorithm1",
    "run_experiment",
    "save_csv",
    "save_network",
    "second_stage",
    "solve_fluid",
    "solve_saa",
    "universal_existence",
    "verify_kkt",
]
