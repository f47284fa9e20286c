"""Per-arm moments, Wald-type confidence intervals, normality and stability
diagnostics.

Conventions: variances are population variances (divide by n); at the sample
sizes produced by the harness the 1/n versus 1/(n-1) gap is far below every
tolerance used here. Arms whose variance estimate degenerates to zero are
excluded from normality aggregation and counted, never imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import Schedule
from .geometry import RegularizedObjective, is_divergence, oracle_minimizer

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# normal distribution helpers (no external dependency)
# ---------------------------------------------------------------------------


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


# Acklam's rational approximation to the inverse normal CDF (relative error
# below 1.15e-9), refined with one Halley step through erf to full double
# precision.
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (
            (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5])
            * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    # Halley refinement against the exact erf-based CDF
    e = normal_cdf(x) - p
    u = e * _SQRT_2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def kolmogorov_survival(z: float) -> float:
    """Survival function of the Kolmogorov distribution,
    Q(z) = 2 * sum_{k>=1} (-1)**(k-1) * exp(-2 k^2 z^2)."""
    if z <= 0.2:
        return 1.0
    total, sign = 0.0, 1.0
    for k in range(1, 200):
        term = math.exp(-2.0 * k * k * z * z)
        total += sign * term
        if term < 1e-16 * max(total, 1e-300):
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


# ---------------------------------------------------------------------------
# moment accumulation
# ---------------------------------------------------------------------------


@dataclass
class ArmStats:
    """Running pull count, mean, and sum of squared deviations for one arm."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @property
    def variance(self) -> float:
        """Population variance m2/n; undefined (nan) before the first pull."""
        return self.m2 / self.n if self.n >= 1 else float("nan")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance) if self.n >= 1 else float("nan")


def update_moments(stats: ArmStats, loss: float) -> ArmStats:
    """Fold one observation into the single-pass mean/m2 recurrence."""
    if not 0.0 <= loss <= 1.0:
        raise ValueError("loss must lie in [0, 1]")
    n_new = stats.n + 1
    delta = loss - stats.mean
    mean = stats.mean + delta / n_new
    m2 = stats.m2 + delta * (loss - mean)
    return ArmStats(n=n_new, mean=mean, m2=m2)


def stats_from_arrays(pulls: np.ndarray, mean: np.ndarray, m2: np.ndarray) -> list[ArmStats]:
    """Wrap per-arm accumulator arrays (as produced by the engine)."""
    return [
        ArmStats(n=int(n), mean=float(mu), m2=float(s)) for n, mu, s in zip(pulls, mean, m2)
    ]


# ---------------------------------------------------------------------------
# Wald intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float
    u: np.ndarray
    degenerate: bool = False

    def covers(self, truth: float) -> bool:
        return self.lo <= truth <= self.hi


def wald_ci(u: np.ndarray, arm_stats: list[ArmStats], level: float) -> ConfidenceInterval:
    """Wald interval for the linear functional u'mu.

    Center u'mu_hat, half-width z_{(1+level)/2} * sqrt(sum u_a^2 var_a / n_a)
    over the contributing arms (u_a != 0). A contributing arm without a pull
    is an error; if every contributing variance is zero the interval
    degenerates to a point and is flagged.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    u = np.asarray(u, dtype=float)
    if u.shape != (len(arm_stats),):
        raise ValueError(f"direction has shape {u.shape}, expected ({len(arm_stats)},)")
    center = 0.0
    se2 = 0.0
    for ua, st in zip(u, arm_stats):
        if ua == 0.0:
            continue
        if st.n < 1:
            raise ValueError("interval undefined: contributing arm was never pulled")
        center += ua * st.mean
        se2 += ua * ua * st.variance / st.n
    half = normal_quantile(0.5 * (1.0 + level)) * math.sqrt(se2)
    return ConfidenceInterval(
        lo=center - half, hi=center + half, level=level, u=u, degenerate=half == 0.0
    )


def coverage(intervals: list[ConfidenceInterval], truth: float) -> float:
    """Fraction of intervals containing the truth; degenerate (point)
    intervals cover exactly when they equal it."""
    if not intervals:
        raise ValueError("coverage of an empty interval list is undefined")
    return sum(ci.covers(truth) for ci in intervals) / len(intervals)


# ---------------------------------------------------------------------------
# normality diagnostics
# ---------------------------------------------------------------------------


def standardized_error(stats: ArmStats, mu_a: float) -> float:
    """sqrt(n) * (mean - mu_a) / std; needs n >= 2 and a nonzero std."""
    if stats.n < 2:
        raise ValueError("standardized error needs at least two observations")
    sd = stats.std
    if not sd > 0.0:
        raise ValueError("standardized error undefined for zero variance")
    return math.sqrt(stats.n) * (stats.mean - mu_a) / sd


def standardized_errors_with_exclusions(
    stats_list: list[ArmStats], mu_a: float
) -> tuple[list[float], int]:
    """Standardized errors across replications; zero-variance or underfilled
    cells are excluded and counted instead of imputed."""
    vals: list[float] = []
    excluded = 0
    for st in stats_list:
        if st.n < 2 or not st.std > 0.0:
            excluded += 1
            continue
        vals.append(standardized_error(st, mu_a))
    return vals, excluded


def ks_statistic(samples) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance of the sample to the standard normal,
    with the asymptotic p-value at sqrt(n) scaling."""
    arr = np.sort(np.asarray(list(samples), dtype=float))
    n = arr.shape[0]
    if n == 0:
        raise ValueError("KS statistic of an empty sample is undefined")
    cdf = np.array([normal_cdf(v) for v in arr])
    i = np.arange(1, n + 1)
    d_plus = (i / n - cdf).max()
    d_minus = (cdf - (i - 1) / n).max()
    d = float(max(d_plus, d_minus))
    return d, kolmogorov_survival(math.sqrt(n) * d)


# ---------------------------------------------------------------------------
# stability diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    """Pull-count and average-iterate ratios against the deterministic
    anchor, the minimizer of the regularized objective."""

    ratio_pulls: np.ndarray  # n_a / (T * xbar_a)
    ratio_oracle: np.ndarray  # xbar_a / x*_a
    is_to_oracle: float  # IS(xbar, x*)
    n_star: np.ndarray  # T * x*_a
    x_star: np.ndarray


def stability_report(traj, schedule: Schedule, mu: np.ndarray) -> StabilityReport:
    """Compare realized pulls and averaged iterates to the stationary anchor."""
    mu = np.asarray(mu, dtype=float)
    obj = RegularizedObjective(mu, schedule.lam, schedule.epsilon)
    x_star = oracle_minimizer(obj, schedule.domain())
    xbar = np.asarray(traj.xbar, dtype=float)
    pulls = np.asarray(traj.pulls, dtype=float)
    T = int(traj.T) if hasattr(traj, "T") else int(pulls.sum())
    return StabilityReport(
        ratio_pulls=pulls / (T * xbar),
        ratio_oracle=xbar / x_star,
        is_to_oracle=is_divergence(xbar, x_star),
        n_star=T * x_star,
        x_star=x_star,
    )
