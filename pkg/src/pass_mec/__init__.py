"""Min-max task-delay optimization for pinching-antenna NOMA-MEC uplinks."""

from .model import (
    Allocation,
    DecodingOrder,
    DerivedConstants,
    PaLayout,
    Scenario,
    SystemParams,
    UserTerminal,
    derive_constants,
)
from .optimizer import (
    NoFeasibleDelayError,
    SolveReport,
    SolverSettings,
    bisection_minimize,
    global_optimize_over_orders,
)

__all__ = [
    "Allocation",
    "DecodingOrder",
    "DerivedConstants",
    "PaLayout",
    "Scenario",
    "SystemParams",
    "UserTerminal",
    "derive_constants",
    "NoFeasibleDelayError",
    "SolveReport",
    "SolverSettings",
    "bisection_minimize",
    "global_optimize_over_orders",
]

__version__ = "0.1.0"
