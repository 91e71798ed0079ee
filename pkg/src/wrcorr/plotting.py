"""Optional figures for the ``curves`` and ``power`` reports.

Matplotlib is imported lazily and only when a figure is requested; install
the ``plot`` extra to enable it.
"""

from __future__ import annotations

import os

from .errors import MethodUnavailableError


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise MethodUnavailableError("plotting requires matplotlib (install the 'plot' extra)") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_curves(rows, directory: str) -> list:
    """One figure per (family, variant): coefficient against theta, one line per p.

    ``rows`` are dicts with keys ``family, variant, p, theta, value``.
    Returns the list of written PNG paths.
    """
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    groups = {}
    for r in rows:
        groups.setdefault((r["family"], r["variant"]), {}).setdefault(r["p"], []).append(
            (r["theta"], r["value"]))
    paths = []
    for (family, variant), by_p in groups.items():
        fig, ax = plt.subplots(figsize=(5, 4))
        for p, pts in sorted(by_p.items()):
            pts.sort()
            ax.plot([a for a, _ in pts], [b for _, b in pts], label=f"p={p}")
        ax.set_xlabel("theta")
        ax.set_ylabel(f"{variant} coefficient")
        ax.set_title(family)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = os.path.join(directory, f"curves_{family}_{variant}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def plot_power(report, directory: str) -> str:
    """Rejection rate against population Spearman's rho, one line per statistic."""
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    family = report.metadata.get("family", "copula")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for stat in report.statistics():
        cells = sorted((c for c in report.cells if c.statistic == stat), key=lambda c: c.theta)
        ax.plot([c.rho_s for c in cells], [c.rejection_rate for c in cells], marker="o", ms=3,
                label=stat)
    ax.axhline(report.metadata.get("alpha", 0.05), color="grey", lw=0.8, ls="--")
    ax.set_xlabel("population Spearman's rho")
    ax.set_ylabel("rejection rate")
    ax.set_title(f"{family}, n={report.metadata.get('n')}")
    ax.legend(fontsize="x-small", ncol=2)
    fig.tight_layout()
    path = os.path.join(directory, f"power_{family}.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
