"""Solver-agnostic MILP construction, LP text export, and the embedded
branch-and-bound solver used in place of a commercial one."""

from .problem import (  # noqa: F401
    BINARY,
    CONTINUOUS,
    MilpProblem,
    MilpSolution,
    SolveConfig,
    check_point,
)
from .build import (  # noqa: F401
    BuiltModel,
    build_assign_at_once,
    build_level1,
    build_level2,
    distance_floor_model,
    model_counts,
    solution_to_schedule,
    warm_start_values,
)
from .branch_bound import lp_relax_solve, solve, solve_lp_file  # noqa: F401
from .lp_format import read_lp, write_lp  # noqa: F401
