"""LP and mixed-binary feasibility kernel."""

from .lp import (
    LinearProgram,
    LPError,
    LPSolution,
    dump_lps,
    complementary_slackness_residual,
    primal_residual,
    solve_lp,
)
from .mip import (
    BinaryLimitError,
    MIPFeasibilityProblem,
    MIPResult,
    enumerate_binaries,
    solve_mip_feasibility,
)

__all__ = [
    "LinearProgram",
    "LPError",
    "LPSolution",
    "dump_lps",
    "complementary_slackness_residual",
    "primal_residual",
    "solve_lp",
    "BinaryLimitError",
    "MIPFeasibilityProblem",
    "MIPResult",
    "enumerate_binaries",
    "solve_mip_feasibility",
]
