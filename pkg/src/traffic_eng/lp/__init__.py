"""Linear and mixed-binary programming: model container, solvers, LP text I/O."""

from .branch_bound import NodeLimitExceeded, solve_milp
from .lpformat import LpFormatError, export_lp_text, read_lp_text, write_lp
from .model import (
    INF,
    Constraint,
    LpModel,
    LpSolution,
    ModelError,
    Relation,
    Sense,
    Status,
    Variable,
    VarKind,
)
from .simplex import FEAS_TOL, NumericalFailure, solve_lp

__all__ = [
    "INF", "FEAS_TOL", "Constraint", "LpModel", "LpSolution", "ModelError", "Relation",
    "Sense", "Status", "Variable", "VarKind", "NumericalFailure", "NodeLimitExceeded",
    "LpFormatError", "solve_lp", "solve_milp", "export_lp_text", "read_lp_text", "write_lp",
]
