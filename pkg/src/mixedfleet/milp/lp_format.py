"""Read and write problems in the industry LP text format.

The writer emits a deterministic file (fixed ordering, full-precision
numbers, explicit bounds for every variable) so exports can be diffed and
cross-checked against external solvers.  The reader accepts the subset
the writer produces plus the common variations: optional labels,
multi-line expressions, ``free``/``infinity`` bounds, and a Generals
section for wider integer variables.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Union

from .problem import BINARY, CONTINUOUS, EQ, GE, LE, MilpProblem

_NAME_OK = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def _num(x: float) -> str:
    if x == math.floor(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".17g")


def sanitize_names(problem: MilpProblem) -> list[str]:
    """LP-safe unique names, aligned with the problem's variable order."""
    seen: dict[str, int] = {}
    out = []
    for var in problem.variables:
        name = re.sub(r"[^A-Za-z0-9_.]", "_", var.name)
        if not name or not _NAME_OK.match(name) or name[0] in "eE.":
            name = "v_" + name
        if name in seen:
            seen[name] += 1
            name = f"{name}__{seen[name]}"
        seen.setdefault(name, 0)
        out.append(name)
    return out


def write_lp(problem: MilpProblem, path: Union[str, Path]) -> None:
    names = sanitize_names(problem)
    lines = [f"\\ {problem.name}"]
    lines.append("Maximize" if problem.objective_sense == "max" else "Minimize")
    terms = " ".join(
        f"{'-' if coef < 0 else '+'} {_num(abs(coef))} {names[col]}"
        for col, coef in sorted(problem.objective.items()))
    if terms:
        lines.append(f" obj: {terms.lstrip('+ ')}")
    elif problem.variables:
        lines.append(f" obj: 0 {names[0]}")
    else:
        lines.append(" obj:")
    lines.append("Subject To")
    for i, con in enumerate(problem.constraints):
        label = re.sub(r"[^A-Za-z0-9_.]", "_", con.name) or f"c{i}"
        body = " ".join(
            f"{'-' if coef < 0 else '+'} {_num(abs(coef))} {names[col]}"
            for col, coef in con.terms)
        body = body.lstrip("+ ").strip() or f"0 {names[0]}"
        lines.append(f" c{i}_{label}: {body} {con.sense} {_num(con.rhs)}")
    lines.append("Bounds")
    for var, name in zip(problem.variables, names):
        lo, hi = var.lower, var.upper
        if math.isinf(lo) and math.isinf(hi):
            lines.append(f" {name} free")
        elif lo == hi:
            lines.append(f" {name} = {_num(lo)}")
        else:
            lo_s = "-infinity" if math.isinf(lo) else _num(lo)
            hi_s = "+infinity" if math.isinf(hi) else _num(hi)
            lines.append(f" {lo_s} <= {name} <= {hi_s}")
    binaries = [names[i] for i, v in enumerate(problem.variables)
                if v.kind == BINARY and v.upper <= 1 and v.lower >= 0]
    generals = [names[i] for i, v in enumerate(problem.variables)
                if v.kind == BINARY and (v.upper > 1 or v.lower < 0)]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {n}" for n in binaries)
    if generals:
        lines.append("Generals")
        lines.extend(f" {n}" for n in generals)
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


_SECTION_RE = re.compile(
    r"^\s*(minimize|maximize|min|max|subject\s+to|such\s+that|st|s\.t\.|"
    r"bounds|binary|binaries|general|generals|integers?|end)\s*$",
    re.IGNORECASE)

_TOKEN_RE = re.compile(
    r"<=|>=|=<|=>|=|\+|-|:|[A-Za-z_!#$%&/,;?@'`{}|~.][A-Za-z0-9_!#$%&/,;?@'`{}|~.]*"
    r"|[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?")


def _parse_number(tok: str) -> float:
    low = tok.lower().lstrip("+")
    if low in ("infinity", "inf", "1e30"):
        return math.inf
    if low in ("-infinity", "-inf", "-1e30"):
        return -math.inf
    return float(tok)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return tok.lower().lstrip("+-") in ("infinity", "inf")


class _VarTable:
    def __init__(self, problem: MilpProblem):
        self.problem = problem
        self.explicit_bounds: set[int] = set()

    def col(self, name: str) -> int:
        key = ("v", name)
        if self.problem.has(key):
            return self.problem.col(key)
        return self.problem.add_var(key, name, 0.0, math.inf, CONTINUOUS)


def _parse_terms(tokens: list[str], table: _VarTable) -> dict[int, float]:
    terms: dict[int, float] = {}
    sign = 1.0
    coef = None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            if coef is not None:
                raise ValueError("dangling coefficient in expression")
            sign = 1.0
        elif tok == "-":
            sign = -sign if coef is None else -sign
        elif _is_number(tok):
            if coef is not None:
                raise ValueError(f"two consecutive numbers near {tok!r}")
            coef = _parse_number(tok)
        else:
            col = table.col(tok)
            value = sign * (1.0 if coef is None else coef)
            terms[col] = terms.get(col, 0.0) + value
            sign, coef = 1.0, None
        i += 1
    if coef is not None:
        raise ValueError("expression ends with a bare number")
    return terms


def read_lp(path: Union[str, Path]) -> MilpProblem:
    text = Path(path).read_text()
    lines = []
    for raw in text.splitlines():
        body = raw.split("\\", 1)[0]
        if body.strip():
            lines.append(body)

    problem = MilpProblem(name=str(path))
    table = _VarTable(problem)
    section = None
    sense = "min"
    objective_tokens: list[str] = []
    constraint_buffers: list[list[str]] = []
    current: list[str] = []
    bounds_lines: list[list[str]] = []
    integer_names: list[tuple[str, str]] = []

    def flush_constraint() -> None:
        if current:
            constraint_buffers.append(list(current))
            current.clear()

    for line in lines:
        header = _SECTION_RE.match(line)
        if header:
            flush_constraint()
            word = header.group(1).lower()
            if word in ("minimize", "min"):
                section, sense = "objective", "min"
            elif word in ("maximize", "max"):
                section, sense = "objective", "max"
            elif word in ("subject to", "such that", "st", "s.t."):
                section = "constraints"
            elif word == "bounds":
                section = "bounds"
            elif word in ("binary", "binaries"):
                section = "binary"
            elif word in ("general", "generals", "integer", "integers"):
                section = "general"
            elif word == "end":
                section = "end"
            continue
        tokens = _TOKEN_RE.findall(line)
        if not tokens:
            continue
        if section == "objective":
            objective_tokens.extend(tokens)
        elif section == "constraints":
            if ":" in tokens and current:
                flush_constraint()
            current.extend(tokens)
            if len(current) >= 2 and _is_number(current[-1]) and any(
                    t in ("<=", ">=", "=", "=<", "=>") for t in current):
                flush_constraint()
        elif section == "bounds":
            bounds_lines.append(tokens)
        elif section in ("binary", "general"):
            for t in tokens:
                integer_names.append((t, section))
    flush_constraint()

    if ":" in objective_tokens:
        objective_tokens = objective_tokens[objective_tokens.index(":") + 1:]
    objective = _parse_terms(objective_tokens, table)

    for buf in constraint_buffers:
        if ":" in buf:
            name = buf[buf.index(":") - 1] if buf.index(":") >= 1 else "c"
            buf = buf[buf.index(":") + 1:]
        else:
            name = f"c{len(problem.constraints)}"
        rel_idx = next((k for k, t in enumerate(buf)
                        if t in ("<=", ">=", "=", "=<", "=>")), None)
        if rel_idx is None:
            raise ValueError(f"constraint {name!r} has no relational operator")
        rel = {"=<": LE, "=>": GE}.get(buf[rel_idx], buf[rel_idx])
        lhs = _parse_terms(buf[:rel_idx], table)
        rhs_terms = buf[rel_idx + 1:]
        rhs_sign = 1.0
        while rhs_terms and rhs_terms[0] in ("+", "-"):
            if rhs_terms[0] == "-":
                rhs_sign = -rhs_sign
            rhs_terms = rhs_terms[1:]
        if len(rhs_terms) != 1 or not _is_number(rhs_terms[0]):
            raise ValueError(f"constraint {name!r}: expected numeric rhs")
        problem.add_constraint(name, lhs.items(), rel,
                               rhs_sign * _parse_number(rhs_terms[0]))

    bound_overrides: dict[int, tuple[float, float]] = {}
    for tokens in bounds_lines:
        if len(tokens) == 2 and tokens[1].lower() == "free":
            col = table.col(tokens[0])
            bound_overrides[col] = (-math.inf, math.inf)
            continue
        rel_positions = [k for k, t in enumerate(tokens)
                         if t in ("<=", ">=", "=", "=<", "=>")]
        if len(rel_positions) == 2:
            lo_toks = tokens[:rel_positions[0]]
            name = tokens[rel_positions[0] + 1]
            hi_toks = tokens[rel_positions[1] + 1:]
            lo = _parse_number("".join(lo_toks))
            hi = _parse_number("".join(hi_toks))
            col = table.col(name)
            bound_overrides[col] = (lo, hi)
        elif len(rel_positions) == 1:
            k = rel_positions[0]
            rel = tokens[k]
            left, right = tokens[:k], tokens[k + 1:]
            if len(left) == 1 and not _is_number(left[0]):
                name, value = left[0], _parse_number("".join(right))
                col = table.col(name)
                old = bound_overrides.get(col, (0.0, math.inf))
                if rel in ("<=", "=<"):
                    bound_overrides[col] = (old[0], value)
                elif rel in (">=", "=>"):
                    bound_overrides[col] = (value, old[1])
                else:
                    bound_overrides[col] = (value, value)
            else:
                value, name = _parse_number("".join(left)), right[0]
                col = table.col(name)
                old = bound_overrides.get(col, (0.0, math.inf))
                if rel in ("<=", "=<"):
                    bound_overrides[col] = (value, old[1])
                else:
                    bound_overrides[col] = (old[0], value)
        else:
            raise ValueError(f"cannot parse bounds line: {' '.join(tokens)}")

    kinds: dict[int, str] = {}
    for name, kind_section in integer_names:
        col = table.col(name)
        kinds[col] = BINARY
        if kind_section == "binary" and col not in bound_overrides:
            bound_overrides[col] = (0.0, 1.0)

    # rebuild variable defs with final bounds/kinds
    from .problem import VarDef

    problem.variables = [
        VarDef(
            name=v.name,
            lower=bound_overrides.get(i, (v.lower, v.upper))[0],
            upper=bound_overrides.get(i, (v.lower, v.upper))[1],
            kind=kinds.get(i, CONTINUOUS),
        )
        for i, v in enumerate(problem.variables)
    ]
    problem.set_objective(sense, objective)
    return problem
