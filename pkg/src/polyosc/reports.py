"""Report emission: delimited output plus rendered figures.

Every experiment driver writes one CSV with a fixed column schema and a PNG
figure rendered next to it, so a run leaves both machine-readable data and a
picture.  Formatting is pinned (12 significant digits, sorted rows) to keep
reruns byte-identical.
"""

from __future__ import annotations

import json
import os
from typing import Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

TRICHOTOMY_COLUMNS = ["experiment", "m", "k", "alpha", "epsilon", "n", "lambda",
                      "limit_SIBC", "limit_dirichlet", "limit_critical", "K",
                      "dofs", "residual"]

__all__ = ["TRICHOTOMY_COLUMNS", "format_cell", "write_csv",
           "trichotomy_figure", "cell_figure", "write_json"]


def format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.12e}"
    return str(value)


def write_csv(path: str, columns: Sequence[str], rows: Sequence[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_cell(row.get(c, "")) for c in columns))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def trichotomy_figure(rows: Sequence[dict], path: str) -> None:
    """Log-log gaps between the perturbed first eigenvalue and each candidate
    limit, one panel per oscillation exponent."""
    first = [r for r in rows if r["n"] == 1 and "lambda" in r]
    alphas = sorted({r["alpha"] for r in first})
    fig, axes = plt.subplots(1, max(len(alphas), 1),
                             figsize=(4.2 * max(len(alphas), 1), 3.4),
                             squeeze=False)
    for ax, alpha in zip(axes[0], alphas):
        sub = sorted((r for r in first if r["alpha"] == alpha),
                     key=lambda r: -r["epsilon"])
        eps = [r["epsilon"] for r in sub]
        for key, label, marker in (("limit_SIBC", "intermediate", "o"),
                                   ("limit_critical", "critical", "s"),
                                   ("limit_dirichlet", "Dirichlet", "^")):
            gaps = [abs(r["lambda"] - r[key]) for r in sub]
            ax.loglog(eps, gaps, marker=marker, label=label)
        ax.set_title(f"alpha = {alpha}")
        ax.set_xlabel("eps")
        ax.set_ylabel("|lambda_eps - lambda_limit|")
        ax.invert_xaxis()
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def cell_figure(solution, oracle_value: float | None, path: str) -> None:
    """Mode energy bars and vertical profiles of the strip solution."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.4))
    ks = [md.k for md in solution.modes]
    energies = [md.energy for md in solution.modes]
    ax1.bar([str(k) for k in ks], energies, color="tab:blue")
    title = f"strange constant K = {solution.K:.6g}"
    if oracle_value is not None:
        title += f"\ntruncated-strip oracle {oracle_value:.6g}"
    ax1.set_title(title, fontsize=9)
    ax1.set_xlabel("mode k")
    ax1.set_ylabel("energy contribution")

    from .cell import evaluate_V
    ys = np.linspace(-3.0, 0.0, 200)
    for ybar in (0.0, 0.25):
        vals = [evaluate_V(solution, (ybar, y), 0).entry((0, 0)) for y in ys]
        ax2.plot(ys, vals, label=f"ybar = {ybar}")
    ax2.set_xlabel("y_N")
    ax2.set_ylabel("V")
    ax2.set_title("strip solution profiles", fontsize=9)
    ax2.grid(alpha=0.3)
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
