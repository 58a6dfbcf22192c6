"""Raw-table loading and independent slope recomputation.

The slopes are ordinary least squares in the stated coordinates, written in
closed form here (not via a fitting library) so the cross-check against the
CLI summary is a genuinely independent computation; agreement within 1e-9 is
flagged in the HTML report otherwise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["MissingColumnError", "FigureSpec", "FIGURES", "ols_slope", "load_table",
           "recompute_fits"]


class MissingColumnError(ValueError):
    def __init__(self, table: str, column: str):
        super().__init__(f"table {table!r} is missing required column {column!r}")
        self.table = table
        self.column = column


def load_table(path: Path, required: tuple[str, ...]) -> list[dict]:
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise MissingColumnError(path.name, required[0])
    for col in required:
        if col not in rows[0]:
            raise MissingColumnError(path.name, col)
    return rows


def ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(slope, intercept) of y on x by the closed-form least-squares sums."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xbar = x.mean()
    ybar = y.mean()
    slope = float(np.sum((x - xbar) * (y - ybar)) / np.sum((x - xbar) ** 2))
    return slope, float(ybar - slope * xbar)


@dataclass(frozen=True)
class FigureSpec:
    """How one experiment's raw table turns into a fit and a figure."""

    name: str                 # figure / --figs name
    table: str                # csv file stem in the input directory
    summary_name: str         # matching row in suite_summary.csv ({beta} slot)
    x_col: str
    y_col: str
    target_slope: float
    target_tol: float
    x_transform: str          # "log_inverse" | "log"
    y_transform: str          # "log" | "identity"
    title: str

    def points(self, rows: list[dict], subset=None) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in rows if (subset is None or subset(r))]
        sel = [r for r in sel if int(float(r.get("fitted", 1)))]
        if not sel:
            raise ValueError(f"no fitted rows in table {self.table}")
        xv = np.array([float(r[self.x_col]) for r in sel])
        yv = np.array([float(r[self.y_col]) for r in sel])
        x = np.log(1.0 / xv) if self.x_transform == "log_inverse" else np.log(xv)
        y = np.log(yv) if self.y_transform == "log" else yv
        return x, y


FIGURES: tuple[FigureSpec, ...] = (
    FigureSpec("one_arm", "one_arm_records", "perc.one_arm.slope",
               "radius", "alpha", 5 / 48, 0.04, "log_inverse", "log",
               "one-arm probability vs mesh (target slope 5/48)"),
    FigureSpec("four_arm", "four_arm_records", "perc.four_arm.slope",
               "radius", "alpha", 5 / 4, 0.15, "log_inverse", "log",
               "alternating four-arm probability vs mesh (target slope 5/4)"),
    FigureSpec("pivotal", "pivotal_scaling_records", "perc.pivotal.scaling",
               "radius", "ball_mass", 3 / 4, 0.10, "log", "log",
               "pivotal measure: anchored ball mass (target slope 3/4)"),
    FigureSpec("area", "area_scaling_records", "perc.area.scaling",
               "radius", "ball_mass", 91 / 48, 0.10, "log", "log",
               "area measure: anchored ball mass (target slope 91/48)"),
    FigureSpec("laplace", "laplace_records", "levy.laplace.beta{beta}",
               "lam", "psi", float("nan"), 0.05, "log", "log",
               "subordinator Laplace exponents (slope = beta)"),
    FigureSpec("circle_var", "circle_var_records", "gmc.circle_var.slope",
               "eps", "variance", 1.0, 0.10, "log_inverse", "identity",
               "circle-average variance vs log(1/eps) (target slope 1)"),
)


def recompute_fits(in_dir: Path, figures: list[FigureSpec]) -> list[dict]:
    """Recompute every selected figure's slope from its raw table.

    Returns rows {figure, summary_name, slope, target}; the laplace figure
    expands into one row per beta value present.
    """
    out = []
    for spec in figures:
        path = in_dir / f"{spec.table}.csv"
        if not path.exists():
            continue
        rows = load_table(path, (spec.x_col, spec.y_col))
        if spec.name == "laplace":
            betas = sorted({float(r["beta"]) for r in rows})
            for beta in betas:
                x, y = spec.points(rows, subset=lambda r, b=beta: float(r["beta"]) == b)
                slope, _ = ols_slope(x, y)
                out.append({"figure": spec.name,
                            "summary_name": spec.summary_name.format(beta=beta),
                            "slope": slope, "target": beta, "tol": spec.target_tol})
        else:
            x, y = spec.points(rows)
            slope, _ = ols_slope(x, y)
            out.append({"figure": spec.name, "summary_name": spec.summary_name,
                        "slope": slope, "target": spec.target_slope,
                        "tol": spec.target_tol})
    return out
