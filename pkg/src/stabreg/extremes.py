"""Monte Carlo estimators confronting simulated paths with the limit theory.

Covers the spectral tail process (conditional signed ratios X_k/X_0), cluster
sizes over threshold within blocks, the extremal index from block maxima, the
anti-clustering curve, and a marginal-tail report.  All estimators are
deterministic functions of (data, config); bootstrap intervals use a seeded
generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .theory import ModelParams, marginal_tail_asymptote


class InsufficientSamplesError(RuntimeError):
    """Too few conditioning samples/blocks for a stable estimate."""


@dataclass
class TailProcessEstimate:
    """Conditional masses of the signed ratio X_k/X_0 given |X_0| above the
    threshold: near +1, near -1, near 0 (within delta), and the leftover."""

    threshold: float
    delta: float
    lags: list[int]
    mass_plus1: np.ndarray
    mass_minus1: np.ndarray
    mass_zero: np.ndarray
    residual: np.ndarray
    count: int


@dataclass
class ClusterEstimate:
    block_length: int
    level: float
    size_histogram: dict[int, int]
    geometric_parameter: float
    mean_cluster_size: float
    common_sign_frequency: float
    positive_sign_frequency: float
    n_blocks: int


@dataclass
class EIEstimate:
    block_length: int
    levels: np.ndarray
    theta_by_level: np.ndarray
    dropped_levels: list[float]
    pooled: float
    ci_low: float
    ci_high: float


@dataclass
class MarginalTailReport:
    grid: np.ndarray
    survival_two_sided: np.ndarray
    survival_one_sided: np.ndarray
    asymptote: np.ndarray
    ratio_to_asymptote: np.ndarray
    one_to_two_sided: np.ndarray
    loglog_slope: float
    remainder_note: str = "next-order remainder is O(x^-alpha log^{p-2} x); not separately measurable"


def collect_columns(paths, columns) -> np.ndarray:
    """Stack values at the given site indices across an iterable of paths."""
    cols = np.asarray(list(columns), dtype=np.int64)
    rows = [np.asarray(p.values)[cols] for p in paths]
    if not rows:
        raise InsufficientSamplesError("empty ensemble")
    return np.vstack(rows)


def block_maxima(paths, start: int = 1) -> np.ndarray:
    """Per-replicate max of X_k over k >= start (k = 0 excluded by convention)."""
    return np.array([float(np.max(np.asarray(p.values)[start:])) for p in paths])


def estimate_tail_process(
    paths,
    quantile: float = 0.99,
    lags=range(0, 11),
    delta: float = 0.1,
    min_exceedances: int = 50,
) -> TailProcessEstimate:
    """Tabulate X_k/X_0 over replicates with |X_0| above its empirical quantile.

    Limit targets: mass near +1 -> u(k)^p, mass near -1 -> 0, mass near 0 ->
    1 - u(k)^p (the conditioned path shares a single sign with X_0).
    """
    if not 0.9 < quantile < 1.0:
        raise ValueError("quantile must lie in (0.9, 1)")
    lags = list(lags)
    data = collect_columns(paths, [0] + lags)
    x0 = data[:, 0]
    m = data[:, 1:]
    threshold = float(np.quantile(np.abs(x0), quantile))
    sel = np.abs(x0) > threshold
    count = int(np.sum(sel))
    if count < min_exceedances:
        raise InsufficientSamplesError(
            f"only {count} exceedances above the {quantile} quantile (need {min_exceedances})"
        )
    ratios = m[sel] / x0[sel, None]
    plus1 = np.mean(np.abs(ratios - 1.0) < delta, axis=0)
    minus1 = np.mean(np.abs(ratios + 1.0) < delta, axis=0)
    zero = np.mean(np.abs(ratios) < delta, axis=0)
    residual = 1.0 - plus1 - minus1 - zero
    return TailProcessEstimate(
        threshold=threshold,
        delta=delta,
        lags=lags,
        mass_plus1=plus1,
        mass_minus1=minus1,
        mass_zero=zero,
        residual=residual,
        count=count,
    )


def estimate_cluster_law(paths, level: float, min_blocks: int = 30) -> ClusterEstimate:
    """Cluster sizes over a level within blocks (one path = one block).

    Over blocks whose absolute maximum exceeds the level, records the number
    of absolute exceedances and whether all exceedances share one sign; the
    geometric parameter is the maximum-likelihood fit 1/mean.
    """
    sizes = []
    common = 0
    positive = 0
    block_length = None
    for p in paths:
        vals = np.asarray(p.values)
        block_length = vals.size - 1
        exceed = np.abs(vals) > level
        c = int(np.sum(exceed))
        if c == 0:
            continue
        sizes.append(c)
        signs = np.sign(vals[exceed])
        if np.all(signs == signs[0]):
            common += 1
            if signs[0] > 0:
                positive += 1
    if len(sizes) < min_blocks:
        raise InsufficientSamplesError(
            f"only {len(sizes)} conditioning blocks (need {min_blocks})"
        )
    sizes = np.asarray(sizes)
    hist = {int(k): int(v) for k, v in zip(*np.unique(sizes, return_counts=True))}
    mean_size = float(np.mean(sizes))
    return ClusterEstimate(
        block_length=block_length,
        level=float(level),
        size_histogram=hist,
        geometric_parameter=1.0 / mean_size,
        mean_cluster_size=mean_size,
        common_sign_frequency=common / len(sizes),
        positive_sign_frequency=positive / max(common, 1),
        n_blocks=len(sizes),
    )


def estimate_extremal_index(
    maxima: np.ndarray,
    scale: float,
    alpha: float,
    levels,
    n_boot: int = 1000,
    boot_seed: int = 0,
) -> EIEstimate:
    """Extremal index from per-replicate block maxima.

    Per level x: theta(x) = -x^alpha log Phat with Phat the fraction of blocks
    whose maximum is <= scale * x; levels with degenerate Phat are dropped and
    reported.  The pooled estimate is the inverse-variance-weighted average
    (delta-method variances); the CI is a replicate-level bootstrap.
    """
    maxima = np.asarray(maxima, dtype=np.float64)
    levels = np.asarray(list(levels), dtype=np.float64)
    n = maxima.size

    def pooled_theta(mx):
        thetas, weights, kept = [], [], []
        for x in levels:
            phat = np.mean(mx <= scale * x)
            if phat <= 0.0 or phat >= 1.0:
                continue
            theta = -(x**alpha) * np.log(phat)
            var = x ** (2 * alpha) * (1.0 - phat) / (phat * mx.size)
            thetas.append(theta)
            weights.append(1.0 / var)
            kept.append(x)
        if not thetas:
            raise InsufficientSamplesError("all levels degenerate (Phat in {0, 1})")
        thetas = np.asarray(thetas)
        weights = np.asarray(weights)
        return float(np.sum(thetas * weights) / np.sum(weights)), thetas, kept

    pooled, thetas, kept = pooled_theta(maxima)
    dropped = [float(x) for x in levels if x not in kept]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([boot_seed])))
    boots = []
    for _ in range(n_boot):
        resample = maxima[rng.integers(0, n, size=n)]
        try:
            boots.append(pooled_theta(resample)[0])
        except InsufficientSamplesError:
            continue
    lo, hi = np.percentile(boots, [2.5, 97.5]) if boots else (np.nan, np.nan)
    return EIEstimate(
        block_length=n,
        levels=np.asarray(kept),
        theta_by_level=thetas,
        dropped_levels=dropped,
        pooled=pooled,
        ci_low=float(lo),
        ci_high=float(hi),
    )


def anti_clustering_curve(
    paths,
    center: int,
    ell_grid,
    quantile: float = 0.99,
    min_exceedances: int = 50,
):
    """Empirical P(max_{ell <= |k - center| <= r} |X_k| > level | |X_center| > level)
    per ell, with the level the empirical quantile of |X_center|.

    Paths must cover the centered window {0, ..., 2*center}; the curve is
    nonincreasing in ell by construction and should fall toward 0.
    """
    ells = sorted(int(e) for e in ell_grid)
    absvals = np.abs(collect_columns(paths, range(2 * center + 1)))
    level = float(np.quantile(absvals[:, center], quantile))
    sel = absvals[:, center] > level
    count = int(np.sum(sel))
    if count < min_exceedances:
        raise InsufficientSamplesError(f"only {count} center exceedances")
    offsets = np.abs(np.arange(2 * center + 1) - center)
    probs = []
    for ell in ells:
        mask = offsets >= ell
        if not np.any(mask):
            probs.append(0.0)
            continue
        hit = np.any(absvals[sel][:, mask] > level, axis=1)
        probs.append(float(np.mean(hit)))
    return np.asarray(ells), np.asarray(probs), level, count


def marginal_tail_report(
    x0: np.ndarray, params: ModelParams, n_grid: int = 12, top_quantile: float = 0.999
) -> MarginalTailReport:
    """Empirical survival of |X_0| on a log-spaced grid against the closed-form
    asymptote, the one/two-sided ratio, and the log-log slope of the top decade."""
    x0 = np.asarray(x0, dtype=np.float64)
    absx = np.abs(x0)
    hi = np.quantile(absx, top_quantile)
    lo = np.quantile(absx, 0.9)
    if lo <= 1.0:
        lo = 1.0 + 1e-9
    grid = np.geomspace(lo, hi, n_grid)
    two = np.array([np.mean(absx > g) for g in grid])
    one = np.array([np.mean(x0 > g) for g in grid])
    asym = np.array([marginal_tail_asymptote(params, g) for g in grid])
    # slope over the top decade of the two-sided survival
    dec = grid >= hi / 10.0
    slope = float(
        np.polyfit(np.log(grid[dec]), np.log(np.maximum(two[dec], 1e-300)), 1)[0]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = two / asym
        one_to_two = np.where(two > 0, one / two, np.nan)
    return MarginalTailReport(
        grid=grid,
        survival_two_sided=two,
        survival_one_sided=one,
        asymptote=asym,
        ratio_to_asymptote=ratio,
        one_to_two_sided=one_to_two,
        loglog_slope=slope,
    )
