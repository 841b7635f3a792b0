"""Headless figure rendering for the CLI report paths.

Every CSV-producing subcommand can render a companion PNG next to its
output; all figures are written to files (Agg backend), never shown.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.dpi": 130,
        "savefig.bbox": "tight",
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
        "legend.fontsize": 8,
    }
)

ETA_MIN = 1.0 + np.pi / 2.0


def plot_bound_curves(
    s: np.ndarray,
    g: np.ndarray,
    sdot: np.ndarray,
    duration: np.ndarray,
    path: str | Path,
) -> Path:
    """Bound curves: G(s), the optimal entropy rate, and the ideal duration."""
    fig, axes = plt.subplots(1, 3, figsize=(9.5, 2.8))
    axes[0].plot(s, g, color="tab:blue")
    axes[0].set(xlabel="min-entropy s", ylabel="G(s)  [1/B]")
    axes[1].plot(s, sdot, color="tab:orange")
    axes[1].set(xlabel="min-entropy s", ylabel="optimal dS/dt  [B]")
    axes[2].plot(s, duration, color="tab:green")
    axes[2].set(xlabel="starting entropy s0", ylabel="ideal duration BT(s0)")
    fig.suptitle(f"minimal Rydberg dwell: eta_min = 1 + pi/2 = {ETA_MIN:.7f}", y=1.02)
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_pulse(
    times: np.ndarray,
    omega: np.ndarray,
    delta: np.ndarray,
    populations: np.ndarray,
    path: str | Path,
    title: str = "",
) -> Path:
    """Control profiles and the driven populations over (gg, W, rr)."""
    fig, (ax_ctrl, ax_pop) = plt.subplots(2, 1, figsize=(6.4, 4.6), sharex=True)
    mid = 0.5 * (times[:-1] + times[1:])
    ax_ctrl.step(mid, omega, where="mid", label="Omega/B", color="tab:cyan")
    ax_ctrl.step(mid, delta, where="mid", label="Delta/B", color="tab:blue", ls="--")
    ax_ctrl.set_ylabel("controls [B]")
    ax_ctrl.legend(loc="best")
    if title:
        ax_ctrl.set_title(title)
    for idx, (label, color) in enumerate(
        (("P_gg", "tab:green"), ("P_W", "tab:orange"), ("P_rr", "tab:red"))
    ):
        ax_pop.plot(times, populations[:, idx], label=label, color=color)
    ax_pop.set(xlabel="time Bt", ylabel="population")
    ax_pop.legend(loc="best")
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(
    bt: np.ndarray, eta: np.ndarray, infidelity: np.ndarray, path: str | Path
) -> Path:
    """Dwell coefficient against pulse duration, with the bound marked."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(bt, eta, "o-", color="tab:blue", label="eta(BT)")
    ax.axhline(ETA_MIN, color="k", ls=":", lw=1, label="eta_min = 1 + pi/2")
    ax.set(xlabel="pulse duration BT", ylabel="eta = B T_r")
    ax.legend(loc="upper right")
    inset = ax.inset_axes([0.45, 0.45, 0.5, 0.4])
    inset.semilogy(bt, np.maximum(infidelity, 1e-16), "s-", color="tab:red", ms=3)
    inset.set_ylabel("1 - F", fontsize=7)
    inset.tick_params(labelsize=6)
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_trajectory_bound(
    entropy: np.ndarray,
    ratio: np.ndarray,
    inv_rate: np.ndarray,
    valid: np.ndarray,
    path: str | Path,
) -> Path:
    """Trajectory diagnostics against the closed-form bound curves."""
    from .bound import g_of_s, sdot_optimal

    s_grid = np.linspace(1e-3, 1.0, 400)
    fig, (ax_ratio, ax_inv) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    ax_ratio.plot(s_grid, [g_of_s(s) for s in s_grid], "k-", lw=1, label="G(s)")
    ax_ratio.plot(entropy[valid], ratio[valid], "o", ms=3, mfc="none", label="trajectory")
    ax_ratio.set(xlabel="min-entropy S", ylabel="P_r / |dS/dt|  [1/B]", ylim=(0, 12))
    ax_ratio.legend(loc="best")
    ax_inv.plot(
        s_grid, [1.0 / sdot_optimal(s) for s in s_grid], "k-", lw=1, label="ideal 1/Sdot"
    )
    ax_inv.plot(entropy[valid], np.abs(inv_rate[valid]), "o", ms=3, mfc="none", label="trajectory")
    ax_inv.set(xlabel="min-entropy S", ylabel="1/|dS/dt|  [1/B]", ylim=(0, 30))
    ax_inv.legend(loc="best")
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
