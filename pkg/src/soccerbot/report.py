"""Scenario run reports: delimited history plus rendered figures.

Takes the per-tick history collected by a headless run and writes a CSV
next to a set of matplotlib figures (trajectory over the field,
localization error, belief confidence).
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .field import FieldSpec  # noqa: E402

CSV_COLUMNS = ["t", "true_x", "true_y", "true_theta", "belief_x", "belief_y",
               "belief_theta", "ball_x", "ball_y", "confidence", "score"]


def write_csv(history: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in history:
            writer.writerow({k: row.get(k, "") for k in CSV_COLUMNS})


def draw_field(ax, field: FieldSpec) -> None:
    for (x1, y1), (x2, y2) in field.line_segments():
        ax.plot([x1, x2], [y1, y2], color="0.6", linewidth=1)
    circle = plt.Circle((0.0, 0.0), field.center_circle_radius, fill=False,
                        color="0.6", linewidth=1)
    ax.add_patch(circle)
    for px, py in field.posts():
        ax.plot(px, py, "o", color="goldenrod", markersize=6)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")


def plot_trajectory(history: list[dict], field: FieldSpec, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 6))
    draw_field(ax, field)
    ax.plot([r["true_x"] for r in history], [r["true_y"] for r in history],
            label="true pose", color="tab:blue")
    ax.plot([r["belief_x"] for r in history],
            [r["belief_y"] for r in history],
            label="belief", color="tab:red", alpha=0.7)
    ax.plot([r["ball_x"] for r in history], [r["ball_y"] for r in history],
            label="ball", color="tab:orange", linestyle=":")
    ax.legend(loc="upper left")
    ax.set_title("scenario trajectory")
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_localization(history: list[dict], path: Path) -> None:
    t = [r["t"] for r in history]
    err = [math.hypot(r["belief_x"] - r["true_x"],
                      r["belief_y"] - r["true_y"]) for r in history]
    conf = [r["confidence"] for r in history]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    ax1.plot(t, err, color="tab:red")
    ax1.set_ylabel("position error [m]")
    ax1.grid(alpha=0.3)
    ax2.plot(t, conf, color="tab:green")
    ax2.set_ylabel("belief confidence")
    ax2.set_xlabel("t [s]")
    ax2.grid(alpha=0.3)
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_report(history: list[dict], result: dict, outdir,
                 field: FieldSpec | None = None) -> dict:
    """Render the run report; returns the paths that were written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    field = field if field is not None else FieldSpec()
    paths = {
        "csv": outdir / "history.csv",
        "trajectory": outdir / "trajectory.png",
        "localization": outdir / "localization.png",
        "summary": outdir / "summary.csv",
    }
    write_csv(history, paths["csv"])
    if history:
        plot_trajectory(history, field, paths["trajectory"])
        plot_localization(history, paths["localization"])
    else:
        paths.pop("trajectory")
        paths.pop("localization")
    with open(paths["summary"], "w", newline="") as fh:
        writer = csv.writer(fh)
        keys = sorted(result)
        writer.writerow(keys)
        writer.writerow([result[k] for k in keys])
    return {k: str(v) for k, v in paths.items()}
