"""Bundle optimizer with an exactly solved simplex dual."""

from ._borat import (
    ContractViolation,
    InvalidInput,
    NumericError,
    __version__,
    closed_form_n2,
    initial_point,
    objective,
    project,
    run,
    solve_dual,
    solve_dual_q,
)

__all__ = [
    "ContractViolation",
    "InvalidInput",
    "NumericError",
    "__version__",
    "closed_form_n2",
    "initial_point",
    "objective",
    "project",
    "run",
    "solve_dual",
    "solve_dual_q",
]
