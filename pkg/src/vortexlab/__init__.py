"""Radial profiles of rotating vortices in easy-axis Landau-Lifshitz ferromagnets."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    CaseLabel,
    CaseTag,
    ModelParams,
    Parity,
    classify_params,
    eval_G,
    eval_g,
    eval_g_prime,
    rhs,
)
from .integrate import RadialProfile, SolverConfig, TerminalEvent, TerminalKind, integrate  # noqa: E402
from .shoot import NoBracketFound, bp_exact, find_a, shoot  # noqa: E402
from .analyze import (  # noqa: E402
    energy,
    oscillation_report,
    partial_energy_growth,
    pohozaev_residual,
    tail_report,
)

__all__ = [
    "CaseLabel", "CaseTag", "ModelParams", "Parity", "classify_params", "eval_G", "eval_g",
    "eval_g_prime", "rhs", "RadialProfile", "SolverConfig", "TerminalEvent", "TerminalKind",
    "integrate", "NoBracketFound", "bp_exact", "find_a", "shoot", "energy", "oscillation_report",
    "partial_energy_growth", "pohozaev_residual", "tail_report",
]
