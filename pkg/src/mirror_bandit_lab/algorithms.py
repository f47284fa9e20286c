"""Learner algorithms: the regularized mirror-descent learner, the plain
exponential-weights baseline, and a loss-version UCB baseline.

This module holds the tuning schedules and the single-step reference
operations. Full episodes are run by :mod:`mirror_bandit_lab.engine`, which
executes the exact same arithmetic vectorized across replications; tests pin
the two paths to bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .geometry import (
    MirrorMap,
    TruncatedSimplex,
    dual_step,
    project_batch,
    regularizer_grad,
)

ALGORITHMS = ("reg-exp3", "exp3", "ucb")
MODES = ("uncorrupted", "corrupted")


def _min_feasible_T(K: int) -> int:
    # smallest T >= 4 with K * ln(T) / sqrt(T) < 1
    lo, hi = 4, 4
    while K * math.log(hi) / math.sqrt(hi) >= 1.0:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if K * math.log(mid) / math.sqrt(mid) < 1.0:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True)
class Schedule:
    """Fully resolved tuning: horizon, arm count, mirror-map index, step
    size, truncation level, regularization weight, and the gamma knob."""

    T: int
    K: int
    alpha: float
    eta: float
    epsilon: float
    lam: float
    gamma: float
    mode: str = "uncorrupted"
    beta: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.K * self.epsilon >= 1.0:
            raise ConfigError(
                f"infeasible truncation: K*epsilon = {self.K * self.epsilon:.6g} >= 1"
            )

    def domain(self) -> TruncatedSimplex:
        return TruncatedSimplex(self.K, self.epsilon)

    def mirror_map(self) -> MirrorMap:
        return MirrorMap(self.alpha)


def make_schedule(
    T: int,
    K: int,
    alpha: float,
    mode: str = "uncorrupted",
    beta: float | None = None,
    gamma_override: float | None = None,
) -> Schedule:
    """Resolve the standard tuning for a horizon.

    Uncorrupted mode: eta = 1/sqrt(T), epsilon = ln(T)/sqrt(T),
    lam = gamma/sqrt(K*T) with gamma defaulting to ln(T)*lnln(T) for
    alpha < 1/3 and lnln(T) otherwise. Corrupted mode (tolerating a
    corruption budget K*T**beta): eta = 1/sqrt(T) and
    epsilon = lam = T**(-(1/2 - beta)) / sqrt(K).
    """
    if not isinstance(T, (int, np.integer)) or T < 4:
        raise ConfigError(f"T must be an integer >= 4, got {T!r}")
    if K < 2:
        raise ConfigError(f"K must be >= 2, got {K}")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    T = int(T)
    eta = 1.0 / math.sqrt(T)

    if mode == "uncorrupted":
        epsilon = math.log(T) / math.sqrt(T)
        if K * epsilon >= 1.0:
            raise ConfigError(
                f"K*ln(T)/sqrt(T) = {K * epsilon:.4g} >= 1; "
                f"smallest feasible horizon for K={K} is T={_min_feasible_T(K)}"
            )
        if gamma_override is not None:
            gamma = float(gamma_override)
            if gamma <= 0.0:
                raise ConfigError("gamma_override must be positive")
        else:
            loglogT = math.log(math.log(T))
            gamma = math.log(T) * loglogT if alpha < 1.0 / 3.0 else loglogT
        lam = gamma / math.sqrt(K * T)
        return Schedule(T, K, alpha, eta, epsilon, lam, gamma, mode="uncorrupted")

    if mode == "corrupted":
        if beta is None or not 0.0 < beta < 0.5:
            raise ConfigError("corrupted mode needs beta in (0, 1/2)")
        if gamma_override is not None:
            raise ConfigError("gamma_override only applies to uncorrupted mode")
        epsilon = T ** (-(0.5 - beta)) / math.sqrt(K)
        if K * epsilon >= 1.0:
            min_T = math.ceil(K ** (1.0 / (1.0 - 2.0 * beta)))
            raise ConfigError(
                f"K*epsilon = {K * epsilon:.4g} >= 1; "
                f"smallest feasible horizon for K={K}, beta={beta} is T={min_T + 1}"
            )
        # lam * sqrt(K*T) for consistency with the uncorrupted parametrization
        gamma = epsilon * math.sqrt(K * T)
        return Schedule(T, K, alpha, eta, epsilon, epsilon, gamma, mode="corrupted", beta=beta)

    raise ConfigError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# single-step reference operations
# ---------------------------------------------------------------------------


def importance_weighted_loss(x: np.ndarray, arm: int, observed_loss: float) -> np.ndarray:
    """Unbiased full-vector loss estimate from one observed coordinate."""
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0.0):
        raise ValueError("x must be strictly positive")
    if not 0.0 <= observed_loss <= 1.0:
        raise ValueError("observed loss must lie in [0, 1]")
    out = np.zeros_like(x)
    out[arm] = observed_loss / x[arm]
    return out


def sample_arm(x: np.ndarray, u: float) -> int:
    """Inverse-CDF draw over the cumulative sums of x from one uniform."""
    cum = np.cumsum(x)
    return int(min((cum < u).sum(), x.shape[0] - 1))


@dataclass(frozen=True)
class LearnerState:
    """Mirror-descent learner state: current distribution, dual point, round
    counter, the running sum of played distributions, and the warm-start dual
    variable for the projection."""

    x: np.ndarray
    z: np.ndarray
    t: int
    xbar_accum: np.ndarray
    proj_theta: float = 0.0


def initial_state(schedule: Schedule) -> LearnerState:
    """Uniform dual initialization, projected into the truncated simplex."""
    z = np.full(schedule.K, 1.0 / schedule.K)
    x, theta = project_batch(schedule.mirror_map(), z[None, :], schedule.domain())
    return LearnerState(
        x=x[0], z=z, t=1, xbar_accum=np.zeros(schedule.K), proj_theta=float(theta[0])
    )


def reg_exp3_step(
    state: LearnerState,
    schedule: Schedule,
    m: MirrorMap,
    observed: tuple[int, float],
) -> LearnerState:
    """One round of the regularized mirror-descent learner.

    Builds the importance-weighted loss estimate, adds the barrier-gradient
    regularization, takes the dual step, and projects back onto the
    truncated simplex.
    """
    arm, loss = observed
    lhat = importance_weighted_loss(state.x, arm, loss)
    ltilde = lhat + schedule.lam * regularizer_grad(state.x, schedule.epsilon)
    z_next = dual_step(m, state.x, ltilde, schedule.eta)
    x_next, theta = project_batch(
        m, z_next[None, :], schedule.domain(), np.array([state.proj_theta])
    )
    return LearnerState(
        x=x_next[0],
        z=z_next,
        t=state.t + 1,
        xbar_accum=state.xbar_accum + state.x,
        proj_theta=float(theta[0]),
    )


def exp3_step(x: np.ndarray, eta: float, observed: tuple[int, float]) -> np.ndarray:
    """Plain exponential-weights update on the full simplex."""
    arm, loss = observed
    x = np.asarray(x, dtype=float).copy()
    x[arm] = x[arm] * np.exp(-eta * loss / x[arm])
    return x / x.sum()


@dataclass(frozen=True)
class UcbState:
    pulls: np.ndarray
    means: np.ndarray
    t: int


def initial_ucb_state(K: int) -> UcbState:
    return UcbState(pulls=np.zeros(K, dtype=np.int64), means=np.zeros(K), t=1)


def ucb_arm(state: UcbState) -> int:
    """Arm choice: sweep each arm once, then pull the lowest index
    mean - sqrt(2 ln t / n); ties break to the lowest arm."""
    K = state.pulls.shape[0]
    if state.t <= K:
        return state.t - 1
    index = state.means - np.sqrt(2.0 * math.log(state.t) / state.pulls)
    return int(np.argmin(index))


def ucb_step(state: UcbState, observed: tuple[int, float]) -> UcbState:
    """Fold the observed loss into the pulled arm's running mean."""
    arm, loss = observed
    pulls = state.pulls.copy()
    means = state.means.copy()
    pulls[arm] += 1
    means[arm] += (loss - means[arm]) / pulls[arm]
    return UcbState(pulls=pulls, means=means, t=state.t + 1)


def pseudo_regret(traj, mu: np.ndarray) -> float:
    """Cumulative excess mean loss over the best fixed arm, from pull counts."""
    mu = np.asarray(mu, dtype=float)
    return float(np.asarray(traj.pulls, dtype=float) @ (mu - mu.min()))
