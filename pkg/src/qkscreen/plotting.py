"""Figures for sweep results: mean AUC-ROC against feature count."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

BRANCH_STYLE = {
    "csvc": ("CSVC", "#008B45", "o"),
    "qsvc_default_c": ("QSVC (default C)", "#3B4992", "s"),
    "qsvc_tuned_c": ("QSVC (CSVC C)", "#BB0021", "^"),
}


def plot_auc_curves(rows, path: str | Path, title: str = "", dpi: int = 150) -> Path:
    """Draw one error-bar curve per branch from tidy rows.

    ``rows`` are mappings with ``n_features``, ``branch``, ``mean`` and
    ``std`` keys, as produced by the ``plotdata`` command.
    """
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    branches = sorted({r["branch"] for r in rows}, key=lambda b: list(BRANCH_STYLE).index(b) if b in BRANCH_STYLE else 99)
    for branch in branches:
        pts = sorted((int(r["n_features"]), float(r["mean"]), float(r["std"])) for r in rows if r["branch"] == branch)
        label, color, marker = BRANCH_STYLE.get(branch, (branch, None, "o"))
        xs, ys, es = zip(*pts)
        es = [0.0 if e != e else e for e in es]  # nan std from a single repeat
        ax.errorbar(xs, ys, yerr=es, label=label, color=color, marker=marker, capsize=3, lw=1.2)
    ax.set_xlabel("number of features")
    ax.set_ylabel("mean AUC-ROC")
    ax.set_ylim(0.0, 1.05)
    xs_all = sorted({int(r["n_features"]) for r in rows})
    ax.set_xticks(xs_all)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
