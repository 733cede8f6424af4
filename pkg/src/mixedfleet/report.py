"""CSV reports and the figures rendered next to them.

CSV files are plain RFC-4180 with a header row; run configuration is
embedded as ordinary trailing columns so each row is self-describing.
Figures are written as PNG with the Agg backend.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence, Union

SWEEP_SCHEMA = "sweep-v1"
COMPARE_SCHEMA = "compare-v1"
SUMMARY_SCHEMA = "summary-v1"

SWEEP_COLUMNS = ["schema", "parameter", "paramValue", "totalCost",
                 "dieselGallons", "evKwh", "co2Tons", "status", "seconds"]
COMPARE_COLUMNS = ["schema", "name", "totalCost", "dieselGallons", "evKwh",
                   "co2Tons", "violations"]
SUMMARY_COLUMNS = ["schema", "scenario", "method", "feasible", "totalCost",
                   "dieselGallons", "evKwh", "co2Tons", "seconds"]


def write_csv(path: Union[str, Path], rows: Sequence[dict],
              columns: Sequence[str], config: Optional[dict] = None) -> None:
    """Write rows with the fixed columns plus embedded config columns."""
    config = config or {}
    extra = [k for k in config if k not in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(columns) + extra)
        for row in rows:
            writer.writerow(
                [_cell(row.get(c, "")) for c in columns]
                + [_cell(config[k]) for k in extra])
        if not rows and extra:
            pass  # header-only file still records the column set


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_sweep_figure(rows: Sequence[dict], parameter: str,
                        path: Union[str, Path]) -> None:
    plt = _plt()
    xs = [row["paramValue"] for row in rows]
    ys = [row["totalCost"] for row in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(xs, ys, marker="o", color="tab:blue")
    ax.set_xlabel(parameter)
    ax.set_ylabel("total cost ($/day)")
    ax.set_title(f"Cost sensitivity: {parameter}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_compare_figure(rows: Sequence[dict], path: Union[str, Path]) -> None:
    plt = _plt()
    names = [row["name"] for row in rows]
    costs = [row["totalCost"] for row in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bars = ax.bar(names, costs, color="tab:blue")
    for bar, row in zip(bars, rows):
        if row.get("violations"):
            bar.set_color("tab:red")
    ax.set_ylabel("total cost ($/day)")
    ax.set_title("Method comparison (red = violations)")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_slot_cost_figure(slot_labels: Sequence[str],
                            slot_costs: Sequence[float],
                            path: Union[str, Path]) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.bar(range(len(slot_costs)), slot_costs, color="tab:green")
    ax.set_xticks(range(len(slot_labels)))
    ax.set_xticklabels(slot_labels, rotation=60, fontsize=7)
    ax.set_xlabel("time slot")
    ax.set_ylabel("cost booked to slot ($)")
    ax.set_title("Replenishment cost by slot")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
