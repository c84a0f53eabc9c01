"""Figure rendering for run artifacts; files land next to the CSV output."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trajectory_figure(records, tau, path):
    """Energy/entropy decay, profile evolution, and bound envelope."""
    t = np.array([r.step_index * tau for r in records])
    energy = np.array([r.energy for r in records])
    entropy = np.array([r.entropy for r in records])
    grid = records[0].state.grid

    fig, axes = plt.subplots(2, 2, figsize=(9, 6))
    axes[0, 0].plot(t, energy, "-o", ms=2.5, color="tab:blue")
    axes[0, 0].set_xlabel("t")
    axes[0, 0].set_ylabel("free energy")

    axes[0, 1].plot(t, entropy, "-o", ms=2.5, color="tab:orange")
    axes[0, 1].set_xlabel("t")
    axes[0, 1].set_ylabel("entropy")

    picks = np.unique(np.linspace(0, len(records) - 1, 6).astype(int))
    cmap = plt.get_cmap("viridis")
    for rank, idx in enumerate(picks):
        axes[1, 0].plot(
            grid.centers,
            records[idx].state.c1.values,
            color=cmap(rank / max(1, len(picks) - 1)),
            label=f"t={records[idx].step_index * tau:.3g}",
        )
    axes[1, 0].set_xlabel("x")
    axes[1, 0].set_ylabel("c1")
    axes[1, 0].set_ylim(-0.05, 1.05)
    axes[1, 0].legend(fontsize=7)

    mins = np.array([np.min(r.state.c1.values) for r in records])
    maxs = np.array([np.max(r.state.c1.values) for r in records])
    axes[1, 1].fill_between(t, mins, maxs, alpha=0.3, color="tab:green")
    axes[1, 1].plot(t, mins, color="tab:green")
    axes[1, 1].plot(t, maxs, color="tab:green")
    axes[1, 1].set_xlabel("t")
    axes[1, 1].set_ylabel("c1 range")
    axes[1, 1].set_ylim(-0.05, 1.05)
    _save(fig, path)


def comparison_figure(comparison, path):
    """Energy decay of the local vs non-local reference solvers."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    t = comparison["times"]
    ax1.plot(t, comparison["energy_local"], label="local", color="tab:red")
    ax1.plot(t, comparison["energy_nonlocal"], label="non-local", color="tab:blue")
    ax1.set_xlabel("t")
    ax1.set_ylabel("free energy")
    ax1.legend()

    ax2.plot(t, comparison["energy_local"] - comparison["energy_nonlocal"], color="k")
    ax2.set_xlabel("t")
    ax2.set_ylabel("E_local - E_nonlocal")
    _save(fig, path)


def reports_figure(reports, path):
    """Margins of the checked inequalities (rhs - lhs, symlog scale)."""
    names = [r.name for r in reports]
    margins = [r.margin for r in reports]
    colors = ["tab:green" if r.holds else "tab:red" for r in reports]
    fig, ax = plt.subplots(figsize=(8, 0.4 * len(reports) + 1.5))
    ax.barh(range(len(reports)), margins, color=colors)
    ax.set_yticks(range(len(reports)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xscale("symlog", linthresh=1e-12)
    ax.set_xlabel("margin (rhs - lhs)")
    ax.axvline(0.0, color="k", lw=0.8)
    _save(fig, path)
