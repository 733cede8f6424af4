"""Command line entry points: solve, validate, compare, sweep,
gen-benchmark, solve-lp."""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__
from .annealing import SaConfig
from .benchmark import (
    SIZES,
    SWEEP_PARAMETERS,
    apply_parameter,
    with_tariff,
    write_benchmark_files,
)
from .greedy import GreedyConfig
from .methods import METHODS, run_method
from .milp.branch_bound import solve_lp_file
from .milp.problem import SolveConfig
from .model import Instance
from .report import (
    COMPARE_COLUMNS,
    COMPARE_SCHEMA,
    SUMMARY_COLUMNS,
    SUMMARY_SCHEMA,
    SWEEP_COLUMNS,
    SWEEP_SCHEMA,
    render_compare_figure,
    render_slot_cost_figure,
    render_sweep_figure,
    write_csv,
)
from .scenario import (
    ScenarioError,
    load_scenario,
    load_schedule,
    save_schedule,
    validate_instance,
)
from .validator import compare as compare_schedules
from .validator import simulate, violations_to_json_lines

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2


def _out_dir(value: str | None) -> Path:
    root = value or os.environ.get("MIXEDFLEET_OUT", "mixedfleet-out")
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(scenario_path: str) -> Instance:
    try:
        return load_scenario(scenario_path)
    except (ScenarioError, FileNotFoundError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


def _tariff_override(inst: Instance, tou: bool | None) -> Instance:
    if tou is None:
        return inst
    return with_tariff(inst, tou)


def _parse_range(text: str) -> list[float]:
    parts = text.split("..")
    if len(parts) not in (2, 3):
        raise click.BadParameter("range must look like start..end[..step]")
    start, end = float(parts[0]), float(parts[1])
    step = float(parts[2]) if len(parts) == 3 else 1.0
    if step <= 0:
        raise click.BadParameter("step must be positive")
    out = []
    value = start
    while value <= end + 1e-9:
        out.append(round(value, 10))
        value += step
    return out


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Mixed electric/diesel fleet day scheduling under time-of-use tariffs."""


method_option = click.option(
    "--method", type=click.Choice(METHODS), default="hierarchical",
    show_default=True)
time_limit_option = click.option(
    "--time-limit", type=float, default=900.0, show_default=True,
    help="Wall-clock budget per MILP solve, in seconds.")
gap_option = click.option(
    "--gap", type=float, default=0.001, show_default=True,
    help="Relative optimality gap that counts as solved.")
seed_option = click.option("--seed", type=int, default=0, show_default=True)
warm_option = click.option(
    "--warm-start/--no-warm-start", default=True, show_default=True,
    help="Seed MILP solves with the greedy schedule.")
tariff_option = click.option(
    "--tou/--flat", "tou", default=None,
    help="Override the scenario tariff with the standard peak/off-peak or "
         "flat pricing.")
node_limit_option = click.option("--node-limit", type=int, default=None)
sa_iterations_option = click.option(
    "--sa-iterations", type=int, default=40000, show_default=True)
lp_backend_option = click.option(
    "--lp-backend", type=click.Choice(["auto", "embedded", "scipy"]),
    default="auto", show_default=True)


def _solve_config(time_limit: float, gap: float, node_limit: int | None,
                  seed: int, lp_backend: str) -> SolveConfig:
    return SolveConfig(time_limit_seconds=time_limit, rel_gap_target=gap,
                       node_limit=node_limit, seed=seed, lp_backend=lp_backend)


@main.command(name="solve")
@click.argument("scenario", type=str)
@method_option
@time_limit_option
@gap_option
@node_limit_option
@seed_option
@warm_option
@tariff_option
@sa_iterations_option
@lp_backend_option
@click.option("--out", type=str, default=None,
              help="Output directory (default $MIXEDFLEET_OUT).")
def cmd_solve(scenario, method, time_limit, gap, node_limit, seed, warm_start,
              tou, sa_iterations, lp_backend, out) -> None:
    """Solve one scenario and write schedule, validation and summary files."""
    inst = _tariff_override(_load(scenario), tou)
    diags = validate_instance(inst)
    if diags:
        for d in diags:
            click.echo(f"invalid instance: {d}", err=True)
        sys.exit(EXIT_INPUT_ERROR)

    out_path = _out_dir(out)
    config = {
        "schemaVersion": 1,
        "tool": f"mixedfleet {__version__}",
        "scenario": str(scenario),
        "method": method,
        "timeLimit": time_limit,
        "gap": gap,
        "nodeLimit": node_limit,
        "seed": seed,
        "warmStart": warm_start,
        "tariffOverride": {None: "none", True: "tou", False: "flat"}[tou],
        "saIterations": sa_iterations,
        "lpBackend": lp_backend,
    }

    run = run_method(
        inst, method,
        solve_config=_solve_config(time_limit, gap, node_limit, seed, lp_backend),
        use_warm_start=warm_start,
        sa_config=SaConfig(iteration_limit=sa_iterations, seed=seed),
    )

    if run.schedule is not None:
        save_schedule(run.schedule, out_path / "schedule.json", config=config)
        sim = simulate(inst, run.schedule)
        (out_path / "validation.json").write_text(json.dumps({
            "config": config,
            "feasible": run.feasible,
            "totalCost": sim.total_cost,
            "dieselGallons": sim.diesel_gallons,
            "evKwh": sim.ev_kwh,
            "co2Tons": sim.co2_tons,
            "violations": [json.loads(v.to_json_line())
                           for v in sim.violations],
            "slotCosts": sim.slot_costs,
            "solver": run.info,
        }, indent=2) + "\n")
        labels = [f"{s.start_min // 60:02d}:{s.start_min % 60:02d}"
                  for s in inst.slots]
        render_slot_cost_figure(labels, sim.slot_costs,
                                out_path / "slot_costs.png")
        summary = [{
            "schema": SUMMARY_SCHEMA,
            "scenario": Path(scenario).name,
            "method": method,
            "feasible": run.feasible,
            "totalCost": sim.total_cost,
            "dieselGallons": sim.diesel_gallons,
            "evKwh": sim.ev_kwh,
            "co2Tons": sim.co2_tons,
            "seconds": run.seconds,
        }]
        write_csv(out_path / "summary.csv", summary, SUMMARY_COLUMNS,
                  config={"seed": seed, "timeLimit": time_limit,
                          "warmStart": warm_start,
                          "tariffOverride": config["tariffOverride"]})
    if run.trace_rows:
        write_csv(out_path / "trace.csv", run.trace_rows,
                  list(run.trace_rows[0].keys()))

    if not run.feasible:
        click.echo(f"{method}: no feasible complete schedule "
                   f"({run.info})", err=True)
        sys.exit(EXIT_INFEASIBLE)
    click.echo(f"{method}: total cost ${run.total_cost:.2f} "
               f"in {run.seconds:.2f}s -> {out_path}")
    sys.exit(EXIT_OK)


@main.command(name="validate")
@click.argument("scenario", type=str)
@click.option("--schedule", "schedule_path", type=str, default=None,
              help="Replay this schedule file; otherwise only check the "
                   "scenario.")
def cmd_validate(scenario, schedule_path) -> None:
    """Check a scenario (and optionally a schedule) and print diagnostics."""
    inst = _load(scenario)
    diags = validate_instance(inst)
    for d in diags:
        click.echo(f"instance: {d}")
    if schedule_path is None:
        sys.exit(EXIT_INFEASIBLE if diags else EXIT_OK)
    try:
        schedule = load_schedule(schedule_path)
    except (ScenarioError, FileNotFoundError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    sim = simulate(inst, schedule)
    if sim.violations:
        click.echo(violations_to_json_lines(sim))
    click.echo(f"totalCost=${sim.total_cost:.4f} "
               f"dieselGallons={sim.diesel_gallons:.3f} "
               f"evKwh={sim.ev_kwh:.3f} violations={len(sim.violations)}")
    sys.exit(EXIT_INFEASIBLE if (diags or sim.violations) else EXIT_OK)


@main.command(name="compare")
@click.argument("scenario", type=str)
@click.option("--methods", default="hierarchical,greedy,sa,assign-at-once",
              show_default=True)
@click.option("--actual", "actual_path", type=str, default=None,
              help="Replay a historical schedule file as an extra row.")
@time_limit_option
@gap_option
@node_limit_option
@seed_option
@warm_option
@tariff_option
@sa_iterations_option
@lp_backend_option
@click.option("--out", type=str, default=None, help="Output CSV path.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def cmd_compare(scenario, methods, actual_path, time_limit, gap, node_limit,
                seed, warm_start, tou, sa_iterations, lp_backend, out,
                plot) -> None:
    """Run several methods on one scenario and tabulate validator replays."""
    inst = _tariff_override(_load(scenario), tou)
    chosen = [m.strip() for m in methods.split(",") if m.strip()]
    bad = [m for m in chosen if m not in METHODS]
    if bad:
        click.echo(f"error: unknown methods {bad}", err=True)
        sys.exit(EXIT_INPUT_ERROR)

    schedules = {}
    for m in chosen:
        run = run_method(
            inst, m,
            solve_config=_solve_config(time_limit, gap, node_limit, seed,
                                       lp_backend),
            use_warm_start=warm_start,
            sa_config=SaConfig(iteration_limit=sa_iterations, seed=seed))
        if run.schedule is not None:
            schedules[m] = run.schedule
        else:
            click.echo(f"note: {m} produced no schedule ({run.info})",
                       err=True)
    if actual_path is not None:
        try:
            schedules["actual"] = load_schedule(actual_path)
        except (ScenarioError, FileNotFoundError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT_ERROR)

    rows = compare_schedules(inst, schedules)
    for row in rows:
        row["schema"] = COMPARE_SCHEMA
    out_csv = Path(out) if out else _out_dir(None) / "compare.csv"
    write_csv(out_csv, rows, COMPARE_COLUMNS,
              config={"scenario": Path(scenario).name, "seed": seed,
                      "timeLimit": time_limit, "warmStart": warm_start})
    if plot and rows:
        render_compare_figure(rows, out_csv.with_suffix(".png"))
    for row in rows:
        click.echo(f"{row['name']}: ${row['totalCost']:.2f} "
                   f"({row['violations']} violations)")
    sys.exit(EXIT_OK)


def _sweep_point(payload):
    (inst, parameter, value, method, solve_cfg, warm, sa_cfg) = payload
    varied = apply_parameter(inst, parameter, value)
    run = run_method(varied, method, solve_config=solve_cfg,
                     use_warm_start=warm, sa_config=sa_cfg)
    if run.schedule is None or not run.feasible:
        return {"parameter": parameter, "paramValue": value,
                "totalCost": float("nan"), "dieselGallons": float("nan"),
                "evKwh": float("nan"), "co2Tons": float("nan"),
                "status": "infeasible", "seconds": run.seconds}
    sim = simulate(varied, run.schedule)
    return {"parameter": parameter, "paramValue": value,
            "totalCost": sim.total_cost, "dieselGallons": sim.diesel_gallons,
            "evKwh": sim.ev_kwh, "co2Tons": sim.co2_tons,
            "status": "feasible", "seconds": run.seconds}


@main.command(name="sweep")
@click.argument("scenario", type=str)
@click.option("--param", "parameter", type=click.Choice(SWEEP_PARAMETERS),
              required=True)
@click.option("--range", "value_range", required=True,
              help="start..end[..step], inclusive.")
@method_option
@time_limit_option
@gap_option
@node_limit_option
@seed_option
@warm_option
@tariff_option
@sa_iterations_option
@lp_backend_option
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=str, default=None, help="Output CSV path.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def cmd_sweep(scenario, parameter, value_range, method, time_limit, gap,
              node_limit, seed, warm_start, tou, sa_iterations, lp_backend,
              jobs, out, plot) -> None:
    """Re-solve a scenario across a parameter range and tabulate costs."""
    inst = _tariff_override(_load(scenario), tou)
    values = _parse_range(value_range)
    solve_cfg = _solve_config(time_limit, gap, node_limit, seed, lp_backend)
    sa_cfg = SaConfig(iteration_limit=sa_iterations, seed=seed)
    payloads = [(inst, parameter, v, method, solve_cfg, warm_start, sa_cfg)
                for v in values]

    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]
    for row in rows:
        row["schema"] = SWEEP_SCHEMA

    out_csv = Path(out) if out else _out_dir(None) / f"sweep-{parameter}.csv"
    write_csv(out_csv, rows, SWEEP_COLUMNS,
              config={"scenario": Path(scenario).name, "method": method,
                      "seed": seed, "timeLimit": time_limit,
                      "warmStart": warm_start})
    if plot and rows:
        render_sweep_figure(rows, parameter, out_csv.with_suffix(".png"))
    for row in rows:
        click.echo(f"{parameter}={row['paramValue']}: "
                   f"cost={row['totalCost']:.4f} ({row['status']})")
    sys.exit(EXIT_OK)


@main.command(name="gen-benchmark")
@seed_option
@click.option("--sizes", default="tiny,small,medium,paper", show_default=True)
@click.option("--out", type=str, default=None, help="Output directory.")
def cmd_gen_benchmark(seed, sizes, out) -> None:
    """Write deterministic synthetic scenario files."""
    chosen = [s.strip() for s in sizes.split(",") if s.strip()]
    bad = [s for s in chosen if s not in SIZES]
    if bad:
        click.echo(f"error: unknown sizes {bad}; have {sorted(SIZES)}",
                   err=True)
        sys.exit(EXIT_INPUT_ERROR)
    out_path = _out_dir(out)
    for path in write_benchmark_files(seed, chosen, out_path):
        click.echo(str(path))
    sys.exit(EXIT_OK)


@main.command(name="solve-lp")
@click.argument("lp_file", type=str)
@time_limit_option
@gap_option
@node_limit_option
@lp_backend_option
def cmd_solve_lp(lp_file, time_limit, gap, node_limit, lp_backend) -> None:
    """Solve a problem in LP text format and print a one-line result."""
    try:
        solution = solve_lp_file(
            lp_file, SolveConfig(time_limit_seconds=time_limit,
                                 rel_gap_target=gap, node_limit=node_limit,
                                 lp_backend=lp_backend))
    except (FileNotFoundError, OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    click.echo(solution.record_line())
    sys.exit(EXIT_OK if solution.has_solution else EXIT_INFEASIBLE)


if __name__ == "__main__":
    main()
