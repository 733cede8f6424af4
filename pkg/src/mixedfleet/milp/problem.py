"""Solver-agnostic mixed-integer linear programs.

A problem is a flat list of bounded variables (binary or continuous), a
list of sparse linear constraints, and a linear objective.  Semantic keys
(tuples such as ``("a_t", vehicle, block)``) map model entities to column
positions so builders, warm starts and schedule extraction agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

BINARY = "B"
CONTINUOUS = "C"

LE = "<="
EQ = "="
GE = ">="


@dataclass(frozen=True)
class VarDef:
    name: str
    lower: float
    upper: float
    kind: str = CONTINUOUS  # BINARY or CONTINUOUS

    def __post_init__(self) -> None:
        if self.kind not in (BINARY, CONTINUOUS):
            raise ValueError(f"variable {self.name}: unknown kind {self.kind!r}")
        if self.lower > self.upper:
            raise ValueError(
                f"variable {self.name}: lower {self.lower} > upper {self.upper}")


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]  # (column, coefficient)
    sense: str
    rhs: float

    def __post_init__(self) -> None:
        if self.sense not in (LE, EQ, GE):
            raise ValueError(f"constraint {self.name}: bad sense {self.sense!r}")


@dataclass
class MilpProblem:
    name: str
    variables: list[VarDef] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective_sense: str = "min"
    objective: dict[int, float] = field(default_factory=dict)
    var_index: dict[tuple, int] = field(default_factory=dict)

    def add_var(self, key: tuple, name: str, lower: float, upper: float,
                kind: str = CONTINUOUS) -> int:
        if key in self.var_index:
            raise ValueError(f"duplicate variable key {key}")
        idx = len(self.variables)
        self.variables.append(VarDef(name=name, lower=lower, upper=upper, kind=kind))
        self.var_index[key] = idx
        return idx

    def add_constraint(self, name: str, terms: Iterable[tuple[int, float]],
                       sense: str, rhs: float) -> None:
        merged: dict[int, float] = {}
        n = len(self.variables)
        for col, coef in terms:
            if not 0 <= col < n:
                raise ValueError(f"constraint {name}: unknown column {col}")
            if coef != 0.0:
                merged[col] = merged.get(col, 0.0) + coef
        self.constraints.append(
            Constraint(name=name, terms=tuple(sorted(merged.items())),
                       sense=sense, rhs=rhs))

    def set_objective(self, sense: str, terms: Mapping[int, float]) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"objective sense must be min or max, got {sense!r}")
        self.objective_sense = sense
        self.objective = {c: v for c, v in terms.items() if v != 0.0}

    def col(self, key: tuple) -> int:
        return self.var_index[key]

    def has(self, key: tuple) -> bool:
        return key in self.var_index

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def integer_columns(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == BINARY]

    def objective_value(self, values: Sequence[float]) -> float:
        return sum(coef * values[col] for col, coef in self.objective.items())


@dataclass(frozen=True)
class SolveConfig:
    """Knobs for one branch-and-bound run."""

    time_limit_seconds: float = 900.0
    rel_gap_target: float = 0.001
    integrality_tol: float = 1e-6
    lp_feas_tol: float = 1e-7
    node_limit: Optional[int] = None
    seed: int = 0
    # LP engine for relaxations: the built-in dense simplex, scipy's
    # sparse solver, or pick by problem size.
    lp_backend: str = "auto"
    max_dense_cells: int = 600_000

    def __post_init__(self) -> None:
        if self.time_limit_seconds <= 0:
            raise ValueError("time_limit_seconds must be positive")
        for name in ("rel_gap_target", "integrality_tol", "lp_feas_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lp_backend not in ("auto", "embedded", "scipy"):
            raise ValueError(f"unknown lp_backend {self.lp_backend!r}")


STATUS_OPTIMAL = "Optimal"
STATUS_FEASIBLE = "FeasibleTimeLimit"
STATUS_INFEASIBLE = "Infeasible"
STATUS_UNBOUNDED = "Unbounded"
STATUS_NO_SOLUTION = "NoSolutionTimeLimit"


def relative_gap(objective: float, best_bound: float) -> float:
    return abs(objective - best_bound) / max(1e-10, abs(objective))


@dataclass(frozen=True)
class MilpSolution:
    status: str
    objective: float
    best_bound: float
    values: tuple[float, ...]
    nodes_explored: int
    wall_seconds: float

    @property
    def rel_gap(self) -> float:
        return relative_gap(self.objective, self.best_bound)

    @property
    def has_solution(self) -> bool:
        return self.status in (STATUS_OPTIMAL, STATUS_FEASIBLE)

    def value_of(self, problem: MilpProblem, key: tuple) -> float:
        return self.values[problem.col(key)]

    def record_line(self) -> str:
        import json

        return json.dumps({
            "status": self.status,
            "objective": self.objective if self.has_solution else None,
            "bound": None if math.isinf(self.best_bound) else self.best_bound,
            "gap": self.rel_gap if self.has_solution else None,
            "nodes": self.nodes_explored,
            "seconds": round(self.wall_seconds, 4),
        }, sort_keys=True)


def check_point(problem: MilpProblem, values: Sequence[float],
                feas_tol: float = 1e-7,
                check_integrality: bool = False,
                integrality_tol: float = 1e-6) -> list[str]:
    """Names of all constraints/bounds the point violates (empty = clean)."""
    violated: list[str] = []
    if len(values) != problem.num_vars:
        return [f"point has {len(values)} values, problem has {problem.num_vars}"]
    for i, var in enumerate(problem.variables):
        x = values[i]
        if x < var.lower - feas_tol or x > var.upper + feas_tol:
            violated.append(
                f"bound[{var.name}]: {x} outside [{var.lower}, {var.upper}]")
        if check_integrality and var.kind == BINARY:
            if abs(x - round(x)) > integrality_tol:
                violated.append(f"integrality[{var.name}]: {x}")
    for con in problem.constraints:
        lhs = sum(coef * values[col] for col, coef in con.terms)
        scale = max(1.0, abs(con.rhs))
        if con.sense == LE and lhs > con.rhs + feas_tol * scale:
            violated.append(f"{con.name}: {lhs} > {con.rhs}")
        elif con.sense == GE and lhs < con.rhs - feas_tol * scale:
            violated.append(f"{con.name}: {lhs} < {con.rhs}")
        elif con.sense == EQ and abs(lhs - con.rhs) > feas_tol * scale:
            violated.append(f"{con.name}: {lhs} != {con.rhs}")
    return violated
