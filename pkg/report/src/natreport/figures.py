"""Matplotlib rendering of the fit figures."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fitting import FigureSpec, load_table, ols_slope

__all__ = ["render_figure"]


def _band(ax, x, y0, slope, tol):
    xs = np.linspace(x.min(), x.max(), 50)
    lo = y0 + (slope - tol) * (xs - x.min())
    hi = y0 + (slope + tol) * (xs - x.min())
    ax.fill_between(xs, lo, hi, alpha=0.18, color="tab:green",
                    label=f"target slope {slope:.4g} +- {tol:g}")


def render_figure(spec: FigureSpec, in_dir: Path, out_dir: Path) -> list[Path]:
    """Scatter + fitted line + target band; one file per figure (laplace
    renders every beta on one axis).  Returns the written paths."""
    rows = load_table(in_dir / f"{spec.table}.csv", (spec.x_col, spec.y_col))
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    if spec.name == "laplace":
        betas = sorted({float(r["beta"]) for r in rows})
        for beta in betas:
            x, y = spec.points(rows, subset=lambda r, b=beta: float(r["beta"]) == b)
            slope, inter = ols_slope(x, y)
            ax.plot(x, y, ".", ms=3)
            ax.plot(x, inter + slope * x, "-", lw=1,
                    label=f"beta={beta:g}: fit {slope:.4f}")
    else:
        x, y = spec.points(rows)
        slope, inter = ols_slope(x, y)
        ax.plot(x, y, "o", ms=5, color="tab:blue", label="estimates")
        ax.plot(x, inter + slope * x, "-", lw=1.5, color="tab:orange",
                label=f"fitted slope {slope:.4f}")
        if math.isfinite(spec.target_slope):
            sign = 1.0 if slope >= 0 else -1.0
            _band(ax, x, y[np.argmin(x)], sign * abs(spec.target_slope), spec.target_tol)
    ax.set_title(spec.title, fontsize=10)
    ax.set_xlabel({"log_inverse": "log(1/scale)", "log": "log scale"}[spec.x_transform])
    ax.set_ylabel("log value" if spec.y_transform == "log" else "value")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = out_dir / f"fig_{spec.name}.png"
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]
