"""Closed-form constants for the multiple-stable model.

Regime classification in (alpha, beta, p), the candidate and actual extremal
indices, the uniform-sum (Irwin-Hall) machinery behind the shape constant,
normalizing sequences for block maxima, and the tail asymptotes used as Monte
Carlo targets.  Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gamma as _gamma

from .renewal import InterRenewalLaw, renewal_mass

SUPER_CRITICAL = "super-critical"
CRITICAL = "critical"
SUB_CRITICAL = "sub-critical"


class BracketToleranceError(RuntimeError):
    """Raised when the series bracket cannot reach the requested width."""

    def __init__(self, width: float, tol: float, n_used: int):
        super().__init__(
            f"bracket width {width:.3e} above tolerance {tol:.3e} at N={n_used}"
        )
        self.width = width
        self.tol = tol
        self.n_used = n_used


@dataclass(frozen=True)
class ModelParams:
    """Model triple: stability alpha in (0,2), memory beta in (0,1), multiplicity p.

    ``beta`` may be a :class:`fractions.Fraction` (or any Rational), in which
    case regime classification is exact.
    """

    alpha: float
    beta: float | Fraction
    p: int

    def __post_init__(self):
        if not 0.0 < float(self.alpha) < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 < float(self.beta) < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")

    @property
    def beta_float(self) -> float:
        return float(self.beta)

    @property
    def beta_p(self):
        """p*beta - p + 1; exact when beta is rational."""
        return self.p * self.beta - self.p + 1


@dataclass(frozen=True)
class RegimeReport:
    beta_p: float | Fraction
    regime: str
    q_beta_p: int


@dataclass(frozen=True)
class ExtremalConstants:
    """Candidate extremal index bracket, shape constant and extremal index.

    In the sub-critical regime ``theta = shape * vartheta`` with
    ``vartheta`` the midpoint of ``(q_lower, q_upper)``; in the critical and
    super-critical regimes both indices are zero and ``shape`` is None.
    """

    q_lower: float | None
    q_upper: float | None
    shape: float | None
    theta: float
    vartheta: float


def min_terminating_order(beta) -> int:
    """Smallest q with q*beta - q + 1 < 0, i.e. the first order at which the
    intersected renewal process terminates."""
    q = 1
    while q * beta - q + 1 >= 0:
        q += 1
    return q


def classify_regime(params: ModelParams) -> RegimeReport:
    bp = params.beta_p
    sign = (bp > 0) - (bp < 0)
    regime = {1: SUPER_CRITICAL, 0: CRITICAL, -1: SUB_CRITICAL}[sign]
    return RegimeReport(beta_p=bp, regime=regime, q_beta_p=min_terminating_order(params.beta))


def irwin_hall_density(p: int, x):
    """Density at x of the sum of p independent uniforms on (0, 1).

    Exact when x is a :class:`fractions.Fraction`; float otherwise.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not isinstance(x, Fraction):
        x = float(x)
    if x <= 0 or x >= p:
        return 0 * x
    total = 0 * x
    for s in range(int(math.floor(x)) + 1):
        total += (-1) ** s * math.comb(p, s) * (x - s) ** (p - 1)
    return total / math.factorial(p - 1)


def shape_D(beta: float, p: int) -> float:
    """Shape constant relating the extremal index to its candidate.

    Evaluated two independent ways -- the alternating binomial sum over orders
    s >= min_terminating_order with base (s(1-beta)-1)**(p-1), and the
    uniform-sum density identity (p-1)! (1-beta)**(p-1) f_p(1/(1-beta)) --
    which must agree to 1e-12.  Defined only when p*beta - p + 1 < 0.
    """
    b = beta if isinstance(beta, Fraction) else Fraction(float(beta))
    if p * b - p + 1 >= 0:
        raise ValueError("shape constant requires the sub-critical regime (p*beta-p+1 < 0)")
    # both routes are rational in beta; evaluate exactly so the alternating sum
    # does not lose the cross-check to cancellation at larger p
    q = min_terminating_order(b)
    alt = Fraction(0)
    for s in range(q, p + 1):
        alt += math.comb(p, s) * (-1) ** (p - s) * (s * (1 - b) - 1) ** (p - 1)
    ih = math.factorial(p - 1) * (1 - b) ** (p - 1) * irwin_hall_density(p, 1 / (1 - b))
    if abs(alt - ih) > Fraction(1, 10**12):
        raise RuntimeError(
            f"shape-constant cross-check failed: sum={float(alt)!r} vs density={float(ih)!r}"
        )
    return float(alt)


def candidate_extremal_index(
    law: InterRenewalLaw,
    p: int,
    tol: float = 1e-4,
    n_max: int = 1 << 22,
) -> tuple[float, float]:
    """Bracket for the termination probability of the p-fold intersected renewal
    process, 1 / sum_n u(n)**p.

    The partial sum to N gives the upper end; the remainder is bounded by an
    empirical constant on u(n)/n**(beta-1) over the last half-window times the
    integral bound for the power tail, giving the lower end.  N doubles until
    the bracket width is <= tol, else :class:`BracketToleranceError`.
    """
    b = law.beta
    if p * b - p + 1 >= 0:
        raise ValueError("series sum diverges unless p*beta - p + 1 < 0")
    a = p * (1.0 - b)
    n_terms = 1 << 14
    while True:
        u = renewal_mass(law, n_terms, method="fft")
        partial = float(np.sum(u**p))
        n = np.arange(n_terms // 2 + 1, n_terms + 1, dtype=np.float64)
        c_n = float(np.max(u[n_terms // 2 + 1 :] / n ** (b - 1.0)) ** p)
        tail = c_n * n_terms ** (1.0 - a) / (a - 1.0)
        lower = 1.0 / (partial + tail)
        upper = 1.0 / partial
        if upper - lower <= tol:
            return lower, upper
        if n_terms >= n_max:
            raise BracketToleranceError(upper - lower, tol, n_terms)
        n_terms *= 2


def extremal_index(
    params: ModelParams, law: InterRenewalLaw, tol: float = 1e-4
) -> ExtremalConstants:
    """Extremal index theta and candidate extremal index for the model.

    Sub-critical: theta = shape * candidate with candidate the termination
    probability of the intersected renewal process.  Critical and
    super-critical: both are zero.
    """
    report = classify_regime(params)
    if report.regime != SUB_CRITICAL:
        return ExtremalConstants(None, None, None, theta=0.0, vartheta=0.0)
    lo, hi = candidate_extremal_index(law, params.p, tol=tol)
    d = shape_D(params.beta_float, params.p)
    q_mid = 0.5 * (lo + hi)
    return ExtremalConstants(q_lower=lo, q_upper=hi, shape=d, theta=d * q_mid, vartheta=q_mid)


def normalizer_b(params: ModelParams, n: float) -> float:
    """Block-maximum scale b_n = ((1/2) n log^{p-1} n / (p!(p-1)!))^{1/alpha}.

    The closed form is adopted exactly (not just asymptotically) so that all
    experiments share one pinned normalizer.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    p = params.p
    val = 0.5 * n * math.log(n) ** (p - 1) / (math.factorial(p) * math.factorial(p - 1))
    return val ** (1.0 / params.alpha)


def normalizer_b_critical(params: ModelParams, n: float) -> float:
    """Critical-regime scale (n (log log n)^{p-1} / log n)^{1/alpha}."""
    if classify_regime(params).regime != CRITICAL:
        raise ValueError("critical normalizer requires p*beta - p + 1 = 0")
    if n < 16:
        raise ValueError("n must be >= 16")
    p = params.p
    val = n * math.log(math.log(n)) ** (p - 1) / math.log(n)
    return val ** (1.0 / params.alpha)


def product_gamma_tail_asymptote(p: int, x: float) -> float:
    """Asymptote of P(1/(Gamma_1 ... Gamma_p) > x): x^{-1} log^{p-1} x / (p!(p-1)!)."""
    if x <= 1:
        raise ValueError("x must be > 1")
    return math.log(x) ** (p - 1) / (x * math.factorial(p) * math.factorial(p - 1))


def marginal_tail_asymptote(params: ModelParams, x: float) -> float:
    """Asymptote of P(|X_k| > x): alpha^{p-1} x^{-alpha} log^{p-1} x / (p!(p-1)!)."""
    if x <= 1:
        raise ValueError("x must be > 1")
    a, p = params.alpha, params.p
    return (
        a ** (p - 1)
        * x ** (-a)
        * math.log(x) ** (p - 1)
        / (math.factorial(p) * math.factorial(p - 1))
    )


def intersected_tail_asymptote(
    law: InterRenewalLaw, p: int, n: float, tol: float = 1e-6
) -> float:
    """Tail of the first positive intersected-renewal time at lag n.

    Super-critical: n^{-beta_p} (C_F G(b) G(1-b))^p / (G(beta_p) G(1-beta_p));
    critical: (C_F G(b) G(1-b))^p / log n; sub-critical: the constant
    termination-probability limit.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    b = law.beta
    bp = p * b - p + 1
    base = (law.tail_constant * _gamma(b) * _gamma(1.0 - b)) ** p
    if bp > 0:
        return float(n) ** (-bp) * base / (_gamma(bp) * _gamma(1.0 - bp))
    if bp == 0:
        return base / math.log(n)
    lo, hi = candidate_extremal_index(law, p, tol=tol)
    return 0.5 * (lo + hi)
