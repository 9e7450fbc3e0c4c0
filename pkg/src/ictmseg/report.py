"""Figure rendering for the CLI report paths.

Figures are written next to the delimited outputs so a run directory is
self-describing without a notebook.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .solver import EnergyTrace  # noqa: E402


def save_energy_figure(trace: EnergyTrace, path) -> None:
    """Plot the energy components over iterations."""
    iters = [r.iteration for r in trace.rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(iters, [r.total for r in trace.rows], "k-", lw=2, label="total")
    ax.plot(iters, [r.fidelity for r in trace.rows], "--", label="fidelity")
    ax.plot(iters, [r.perimeter for r in trace.rows], "--", label="perimeter")
    if any(r.lvf for r in trace.rows):
        ax.plot(iters, [r.lvf for r in trace.rows], "--", label="variance force")
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bench_figure(cells, path) -> None:
    """Plot accuracy against noise variance, one curve per (case, p)."""
    series: dict[tuple[str, float], list[tuple[float, float]]] = {}
    for cell in cells:
        for row in cell.rows:
            series.setdefault((row.case, row.p), []).append((row.variance, row.accuracy))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for (case, p), pts in sorted(series.items()):
        pts.sort()
        label = f"{case}, p={p:g}"
        ax.plot([v for v, _ in pts], [a for _, a in pts], "o-", label=label)
    ax.set_xlabel("noise variance")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.02)
    if series:
        ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
