"""Figure rendering for the report paths of the CLI.

Each helper takes already-loaded data and writes one PNG next to the
delimited output it visualizes: training curves, a single optimization
episode, the evaluation grid matrix, and the sample distributions.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_training_figure(per_seed_rows: dict[int, list[dict]], out_path) -> None:
    """Mean episode reward across seeds with std band and best/worst envelopes."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n_batches = min(len(rows) for rows in per_seed_rows.values())
    episodes = [per_seed_rows[next(iter(per_seed_rows))][b]["episodes_done"] for b in range(n_batches)]
    means = np.array([
        [rows[b]["reward_mean"] for rows in per_seed_rows.values()] for b in range(n_batches)
    ])
    best = np.array([
        np.mean([rows[b]["reward_max"] for rows in per_seed_rows.values()]) for b in range(n_batches)
    ])
    worst = np.array([
        np.mean([rows[b]["reward_min"] for rows in per_seed_rows.values()]) for b in range(n_batches)
    ])
    mu, sd = means.mean(axis=1), means.std(axis=1)
    ax.plot(episodes, best, color="tab:blue", lw=1.0, label="best episode")
    ax.plot(episodes, mu, color="black", lw=1.5, label="mean")
    ax.fill_between(episodes, mu - sd, mu + sd, color="gray", alpha=0.3)
    ax.plot(episodes, worst, color="tab:red", lw=1.0, label="worst episode")
    ax.set_xlabel("episodes")
    ax.set_ylabel("episode reward")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_trace_figure(rows: list[dict], p_t1: float, p_t2: float, out_path) -> None:
    """Output powers vs targets (top) and reward components (bottom)."""
    steps = [r["step"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.semilogy(steps, [r["p_r1"] for r in rows], color="tab:blue", label="output power 1")
    ax1.semilogy(steps, [r["p_r2"] for r in rows], color="tab:orange", label="output power 2")
    ax1.axhline(p_t1, color="tab:blue", ls="--", lw=1.0)
    ax1.axhline(p_t2, color="tab:orange", ls="--", lw=1.0)
    ax1.set_ylabel("output power (W)")
    ax1.legend(loc="best")
    ax1.grid(alpha=0.3)
    for key, label, style in (
        ("r_e1", "efficiency reward 1", "-"),
        ("r_e2", "efficiency reward 2", "--"),
        ("r_p1", "power reward 1", "-"),
        ("r_p2", "power reward 2", "--"),
        ("reward", "total reward", "-"),
    ):
        lw = 2.0 if key == "reward" else 1.0
        color = "black" if key == "reward" else None
        ax2.plot(steps, [r[key] for r in rows], style, lw=lw, color=color, label=label)
    ax2.set_xlabel("update step")
    ax2.set_ylabel("reward")
    ax2.set_ylim(-0.05, 1.05)
    ax2.legend(loc="lower right", fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_grid_figure(report, out_path) -> None:
    """Mean-reward matrix annotated with power deviation and efficiency."""
    n1, n2 = len(report.p1_values), len(report.p2_values)
    rewards = np.zeros((n1, n2))
    for cell in report.cells:
        rewards[cell["i"], cell["j"]] = cell["mean_reward"]
    fig, ax = plt.subplots(figsize=(1.6 * n2 + 2, 1.4 * n1 + 2))
    im = ax.imshow(rewards, vmin=0.0, vmax=1.0, cmap="viridis", origin="lower")
    for cell in report.cells:
        ax.text(cell["j"], cell["i"] + 0.18, f"ΔP {cell['mean_dp_pct']:.1f}%",
                ha="center", va="center", color="white", fontsize=8)
        ax.text(cell["j"], cell["i"] - 0.18, f"e {100 * cell['mean_e']:.1f}%",
                ha="center", va="center", color="black", fontsize=8)
    ax.set_xticks(range(n2), [f"{v:.0f}" for v in report.p2_values])
    ax.set_yticks(range(n1), [f"{v:.0f}" for v in report.p1_values])
    ax.set_xlabel("target power 2 (W)")
    ax.set_ylabel("target power 1 (W)")
    fig.colorbar(im, ax=ax, label="mean episode reward")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_distribution_figure(report, out_path) -> None:
    """Histograms of power deviations and efficiencies over all samples."""
    dp1 = [s["dp1_pct"] for s in report.samples]
    dp2 = [s["dp2_pct"] for s in report.samples]
    e1 = [100.0 * s["e1"] for s in report.samples]
    e2 = [100.0 * s["e2"] for s in report.samples]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6))
    top = max(5.0, np.percentile(dp1 + dp2, 99))
    bins = np.linspace(0.0, top, 30)
    ax1.hist(dp1, bins=bins, alpha=0.6, label="operation point 1")
    ax1.hist(dp2, bins=bins, alpha=0.6, label="operation point 2")
    ax1.set_xlabel("power deviation (%)")
    ax1.set_ylabel("samples")
    ax1.legend()
    ax1.grid(alpha=0.3)
    bins = np.linspace(min(e1 + e2 + [80.0]), 100.0, 30)
    ax2.hist(e1, bins=bins, alpha=0.6, label="operation point 1")
    ax2.hist(e2, bins=bins, alpha=0.6, label="operation point 2")
    ax2.set_xlabel("efficiency (%)")
    ax2.set_ylabel("samples")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
