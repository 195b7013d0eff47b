"""Matplotlib figure rendering for experiment reports.

Each helper takes estimator output plus its theory target and writes a PNG
next to the delimited output.  Uses the Agg backend; nothing here opens a
window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def save_tail_process_figure(est, targets, path):
    """Bar chart of conditional mass near +1 per lag vs the u(k)^p target."""
    lags = np.asarray(est.lags)
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.35
    ax.bar(lags - width / 2, est.mass_plus1, width, label="mass near +1 (MC)")
    ax.bar(lags + width / 2, targets, width, label="u(k)^p target")
    ax.plot(lags, est.mass_minus1, "kx", label="mass near -1")
    ax.set_xlabel("lag k")
    ax.set_ylabel("conditional mass")
    ax.set_title(f"Tail process, threshold={est.threshold:.3g}, n={est.count}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ei_figure(est, target, path):
    """Per-level extremal-index estimates with the pooled value and target."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(est.levels, est.theta_by_level, "o-", label="theta(x)")
    ax.axhline(est.pooled, color="C1", label=f"pooled {est.pooled:.3f}")
    ax.axhspan(est.ci_low, est.ci_high, color="C1", alpha=0.2, label="95% bootstrap CI")
    if target is not None:
        ax.axhline(target, color="C3", ls="--", label=f"theory {target:.3f}")
    ax.set_xlabel("level x")
    ax.set_ylabel("extremal index estimate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_cluster_figure(est, target_mean, path):
    """Cluster-size histogram against the geometric law with the target mean."""
    ks = sorted(est.size_histogram)
    counts = np.array([est.size_histogram[k] for k in ks], dtype=float)
    freq = counts / counts.sum()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(ks, freq, label="MC cluster sizes")
    if target_mean is not None:
        q = 1.0 / target_mean
        kk = np.arange(1, max(ks) + 1)
        ax.plot(kk, q * (1 - q) ** (kk - 1), "C3o--", label="geometric target")
    ax.set_xlabel("cluster size")
    ax.set_ylabel("frequency")
    ax.set_title(f"mean {est.mean_cluster_size:.3f}, common-sign {est.common_sign_frequency:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_anticluster_figure(ells, probs, level, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ells, probs, "o-")
    ax.axhline(0.1, color="C3", ls="--", label="0.1 diagnostic line")
    ax.set_xlabel("gap $\\ell$")
    ax.set_ylabel("P(exceedance beyond $\\ell$ | center exceedance)")
    ax.set_title(f"anti-clustering curve, level={level:.3g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_marginal_figure(report, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].loglog(report.grid, report.survival_two_sided, "o-", label="MC P(|X|>x)")
    axes[0].loglog(report.grid, report.asymptote, "--", label="asymptote")
    axes[0].set_xlabel("x")
    axes[0].legend()
    axes[0].set_title(f"log-log slope {report.loglog_slope:.2f}")
    axes[1].semilogx(report.grid, report.one_to_two_sided, "o-")
    axes[1].axhline(0.5, color="C3", ls="--")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("P(X>x)/P(|X|>x)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
