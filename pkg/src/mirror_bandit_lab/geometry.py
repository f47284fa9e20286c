"""Simplex geometry: Tsallis-style mirror maps, Bregman divergences, and
projections onto the truncated probability simplex.

The mirror map family is indexed by ``alpha`` in [0, 1]:

* ``alpha = 1``  -- negative entropy, ``sum(x*ln(x) - x + 1)``
* ``alpha = 0``  -- log barrier, ``-sum(ln(x) - x + 1)``
* ``0 < alpha < 1`` -- ``-sum((x**alpha - alpha*x - (1-alpha)) / (alpha*(1-alpha)))``

Every map has value 0 and gradient 0 at the all-ones vector, and the three
branches agree in the limits ``alpha -> 0`` and ``alpha -> 1``.

All functions broadcast over leading axes: inputs of shape ``(..., K)`` are
treated as stacks of K-vectors, which is what the batched episode engine
relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError

# Exact-branch switchover; avoids catastrophic cancellation in 1/(a*(1-a)).
_ALPHA_TOL = 1e-12

# Bisection/Newton stopping rule for the 1-D dual solves.
_SUM_TOL = 1e-12
_MAX_ITER = 200
# Residual beyond which the solver reports failure instead of returning.
_SUM_FAIL = 1e-9
# Stand-in for +inf coordinates inside the dual solves (keeps sums finite).
_HUGE = 1e300


def _require_positive(x: np.ndarray, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0 or not np.all(x > 0.0):
        raise ValueError(f"{name} must have strictly positive entries")
    return x


def check_prob_vector(x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Validate a point of the probability simplex (K >= 2, sums to 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("probability vector needs at least two coordinates")
    if np.any(x < 0.0):
        raise ValueError("probability vector has a negative entry")
    if abs(float(x.sum()) - 1.0) > tol:
        raise ValueError(f"probability vector sums to {x.sum():.12g}, not 1")
    return x


@dataclass(frozen=True)
class TruncatedSimplex:
    """Probability vectors with every coordinate at least ``epsilon``."""

    K: int
    epsilon: float

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError(f"need at least 2 arms, got K={self.K}")
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon must be positive")
        if self.K * self.epsilon > 1.0 + 1e-15:
            raise ConfigError(
                f"empty domain: K*epsilon = {self.K * self.epsilon:.6g} > 1"
            )

    @property
    def is_singleton(self) -> bool:
        return self.K * self.epsilon >= 1.0 - 1e-15

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return (
            x.shape[-1] == self.K
            and bool(np.all(x >= self.epsilon - tol))
            and abs(float(x.sum()) - 1.0) <= 1e-9
        )


@dataclass(frozen=True)
class MirrorMap:
    """Mirror potential phi_alpha with its gradient, inverse gradient and
    Bregman divergence."""

    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")

    # -- branch helpers ----------------------------------------------------
    @property
    def _is_entropy(self) -> bool:
        return abs(1.0 - self.alpha) < _ALPHA_TOL

    @property
    def _is_barrier(self) -> bool:
        return abs(self.alpha) < _ALPHA_TOL

    @property
    def grad_sup(self) -> float:
        """Supremum of the gradient range (coordinatewise, exclusive)."""
        if self._is_entropy:
            return np.inf
        return 1.0 / (1.0 - self.alpha)

    # -- potential ---------------------------------------------------------
    def value(self, x: np.ndarray) -> float | np.ndarray:
        """phi_alpha(x); sums over the last axis."""
        x = _require_positive(x)
        if self._is_entropy:
            s = x * np.log(x) - x + 1.0
        elif self._is_barrier:
            s = -(np.log(x) - x + 1.0)
        else:
            a = self.alpha
            s = -(x**a - a * x - (1.0 - a)) / (a * (1.0 - a))
        out = s.sum(axis=-1)
        return float(out) if np.isscalar(out) or out.ndim == 0 else out

    def grad(self, x: np.ndarray) -> np.ndarray:
        """Coordinatewise gradient of phi_alpha."""
        x = _require_positive(x)
        if self._is_entropy:
            return np.log(x)
        if self._is_barrier:
            return 1.0 - 1.0 / x
        a = self.alpha
        return (1.0 - x ** (a - 1.0)) / (1.0 - a)

    def _grad_inverse_raw(self, u: np.ndarray) -> np.ndarray:
        """Inverse gradient without range checks; out-of-range maps to a huge
        finite sentinel so callers can sum without overflow warnings."""
        u = np.asarray(u, dtype=float)
        if self._is_entropy:
            return np.exp(np.minimum(u, 700.0))
        if self._is_barrier:
            base = 1.0 - u
            safe = np.where(base > 1e-300, base, 1.0)
            return np.where(base > 1e-300, 1.0 / safe, _HUGE)
        a = self.alpha
        base = 1.0 - (1.0 - a) * u
        safe = np.where(base > 1e-300, base, 1.0)
        return np.where(base > 1e-300, np.minimum(safe ** (1.0 / (a - 1.0)), _HUGE), _HUGE)

    def grad_inverse(self, u: np.ndarray) -> np.ndarray:
        """v with grad(v) = u; requires u inside the gradient range."""
        u = np.asarray(u, dtype=float)
        if not np.all(u < self.grad_sup):
            raise ValueError(
                f"dual point outside gradient range (need u < {self.grad_sup:.6g})"
            )
        return self._grad_inverse_raw(u)

    def bregman(self, x: np.ndarray, y: np.ndarray) -> float | np.ndarray:
        """D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>; >= 0."""
        x = _require_positive(x)
        y = _require_positive(y, "y")
        inner = (self.grad(y) * (x - y)).sum(axis=-1)
        out = self.value(x) - self.value(y) - inner
        return float(out) if np.isscalar(out) or np.ndim(out) == 0 else out


def log_barrier(x: np.ndarray) -> float:
    """psi(x) = -sum(ln x), the pure log-barrier potential."""
    x = _require_positive(x)
    return float(-np.log(x).sum())


def is_divergence(x: np.ndarray, y: np.ndarray) -> float:
    """Itakura-Saito distance: sum(x/y - ln(x/y) - 1); >= 0, 0 iff x == y."""
    x = _require_positive(x)
    y = _require_positive(y, "y")
    r = x / y
    return float((r - np.log(r) - 1.0).sum())


def regularizer_value(x: np.ndarray, epsilon: float) -> float:
    """Barrier regularizer -sum(ln x) + sum(x)/epsilon."""
    x = _require_positive(x)
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    return float(-np.log(x).sum() + x.sum() / epsilon)


def regularizer_grad(x: np.ndarray, epsilon: float) -> np.ndarray:
    """Coordinatewise -1/x + 1/epsilon; nonnegative whenever x >= epsilon."""
    x = _require_positive(x)
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    return 1.0 / epsilon - 1.0 / x


@dataclass(frozen=True)
class RegularizedObjective:
    """Linear loss plus a weighted barrier: <mu, x> + lam * R_eps(x)."""

    mu: np.ndarray
    lam: float
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        if self.lam < 0.0:
            raise ConfigError("lam must be nonnegative")
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon must be positive")

    def value(self, x: np.ndarray) -> float:
        x = _require_positive(x)
        return float(self.mu @ x) + self.lam * regularizer_value(x, self.epsilon)

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = _require_positive(x)
        return self.mu + self.lam * (1.0 / self.epsilon - 1.0 / x)


def dual_step(
    m: MirrorMap, x: np.ndarray, loss_tilde: np.ndarray, eta: float
) -> np.ndarray:
    """Unconstrained mirror-descent step: z with grad(z) = grad(x) - eta*loss.

    Nonnegative losses only ever push the dual point down, so the inverse
    gradient is always defined and z <= x coordinatewise.
    """
    if not eta > 0.0:
        raise ValueError("eta must be positive")
    loss_tilde = np.asarray(loss_tilde, dtype=float)
    if np.any(loss_tilde < 0.0):
        raise ValueError("loss_tilde must be nonnegative coordinatewise")
    x = _require_positive(x)
    return m.grad_inverse(m.grad(x) - eta * loss_tilde)


# ---------------------------------------------------------------------------
# Bregman projection onto the truncated simplex
# ---------------------------------------------------------------------------
#
# KKT reduction: the projection of z is x_j(theta) = max(eps, (grad)^-1(g_j + theta))
# with g = grad(z) and a single scalar theta chosen so the coordinates sum to 1.
# h(theta) = sum_j x_j(theta) is continuous and nondecreasing, so the root is
# found by growing a bracket geometrically from the start value and then
# shrinking it with safeguarded Newton steps (bisection fallback).


def _project_eval(m, g, eps, grad_eps, theta):
    """x(theta), h(theta), h'(theta) for a stack of rows; theta has shape (B,)."""
    u = g + theta[:, None]
    clipped = u <= grad_eps
    x = np.where(clipped, eps, m._grad_inverse_raw(u))
    h = x.sum(axis=1)
    # dx/dtheta = 1 / phi''(x) = x**(2 - alpha) on unclipped, finite coords
    dead = clipped | (x >= _HUGE)
    live = np.where(dead, 0.0, x)
    if m._is_entropy:
        dx = live
    elif m._is_barrier:
        dx = live * live
    else:
        dx = np.where(dead, 0.0, np.where(dead, 1.0, x) ** (2.0 - m.alpha))
    hp = dx.sum(axis=1)
    return x, h, hp


def project_batch(
    m: MirrorMap,
    Z: np.ndarray,
    domain: TruncatedSimplex,
    theta0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Project each row of Z onto the truncated simplex.

    Returns the projected rows and the per-row dual variables (useful as a
    warm start for the next call). Row results depend only on that row's
    inputs, never on the batch composition.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    B, K = Z.shape
    if K != domain.K:
        raise ValueError(f"z has {K} coordinates, domain expects {domain.K}")
    if not np.all(Z > 0.0):
        raise ValueError("z must have strictly positive entries")
    eps = domain.epsilon
    if domain.is_singleton:
        return np.full((B, K), 1.0 / K), np.zeros(B)

    g = m.grad(Z)
    grad_eps = float(m.grad(np.array([eps]))[0])
    theta = np.zeros(B) if theta0 is None else np.array(theta0, dtype=float)

    # Safeguarded Newton: h is convex nondecreasing in theta, so Newton steps
    # converge globally; brackets fill in from the evaluations and bound every
    # candidate, with geometric expansion toward a side not yet enclosed.
    lo = np.full(B, -np.inf)
    hi = np.full(B, np.inf)
    step = np.full(B, 0.25)
    x_out, h_out, hp = _project_eval(m, g, eps, grad_eps, theta)
    active = np.abs(h_out - 1.0) > _SUM_TOL
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        lo = np.where(active & (h_out < 1.0), theta, lo)
        hi = np.where(active & (h_out > 1.0), theta, hi)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            newton = theta - (h_out - 1.0) / hp
            newton_ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            bracketed = np.isfinite(lo) & np.isfinite(hi)
            fallback = np.where(
                bracketed,
                0.5 * (lo + hi),
                np.where(h_out > 1.0, theta - step, theta + step),
            )
        step = np.where(active & ~newton_ok & ~bracketed, step * 2.0, step)
        theta = np.where(active, np.where(newton_ok, newton, fallback), theta)
        x, h, hp = _project_eval(m, g, eps, grad_eps, theta)
        x_out = np.where(active[:, None], x, x_out)
        h_out = np.where(active, h, h_out)
        active = np.abs(h_out - 1.0) > _SUM_TOL

    resid = np.abs(h_out - 1.0)
    if np.any(resid > _SUM_FAIL):
        i = int(np.argmax(resid))
        raise NumericError(
            f"projection did not converge: |sum-1|={resid[i]:.3g} "
            f"with bracket [{lo[i]:.6g}, {hi[i]:.6g}]"
        )
    return x_out, theta


def project(m: MirrorMap, z: np.ndarray, domain: TruncatedSimplex) -> np.ndarray:
    """Bregman projection argmin_{x in simplex_eps} D_phi(x, z)."""
    x, _ = project_batch(m, np.asarray(z, dtype=float)[None, :], domain)
    return x[0]


def oracle_minimizer(
    obj: RegularizedObjective, domain: TruncatedSimplex
) -> np.ndarray:
    """Unique minimizer of the regularized objective over the truncated simplex.

    Stationarity gives x_j = max(eps, lam / (mu_j + lam/eps + theta)) for a
    scalar theta making the coordinates sum to 1; the sum is strictly
    decreasing in theta, so the root is bracketed and bisected (with Newton
    polish) exactly like the projection solve.
    """
    if obj.lam <= 0.0:
        raise ConfigError("oracle minimizer requires lam > 0")
    K = domain.K
    if obj.mu.shape != (K,):
        raise ConfigError(f"mu has shape {obj.mu.shape}, domain expects ({K},)")
    eps = domain.epsilon
    if domain.is_singleton:
        return np.full(K, 1.0 / K)

    lam = obj.lam
    d = obj.mu + lam / eps
    pole = -float(d.min())

    def evaluate(theta: float):
        den = d + theta
        with np.errstate(divide="ignore"):
            raw = np.where(den > 0.0, lam / np.where(den > 0.0, den, 1.0), np.inf)
        x = np.maximum(eps, raw)
        free = raw > eps
        h = float(x.sum())
        hp = float(-(lam / den[free] ** 2).sum()) if free.any() else 0.0
        return x, h, hp

    # Bracket in the offset s = theta - pole > 0: h -> inf as s -> 0+,
    # h -> K*eps < 1 as s -> inf.
    s_hi = 1.0
    for _ in range(_MAX_ITER):
        _, h, _ = evaluate(pole + s_hi)
        if h <= 1.0:
            break
        s_hi *= 2.0
    else:
        raise NumericError("minimizer bracket search failed (upper side)")
    s_lo = min(1.0, s_hi)
    for _ in range(_MAX_ITER):
        _, h, _ = evaluate(pole + s_lo)
        if h >= 1.0:
            break
        s_lo *= 0.5
    else:
        raise NumericError("minimizer bracket search failed (lower side)")

    lo, hi = pole + s_lo, pole + s_hi  # h(lo) >= 1 >= h(hi)
    theta = 0.5 * (lo + hi)
    x, h, hp = evaluate(theta)
    for _ in range(_MAX_ITER):
        if abs(h - 1.0) <= _SUM_TOL:
            break
        if h > 1.0:
            lo = theta
        else:
            hi = theta
        newton = theta - (h - 1.0) / hp if hp < 0.0 else np.nan
        theta = newton if np.isfinite(newton) and lo < newton < hi else 0.5 * (lo + hi)
        x, h, hp = evaluate(theta)
    if abs(h - 1.0) > _SUM_FAIL:
        raise NumericError(
            f"minimizer did not converge: |sum-1|={abs(h - 1.0):.3g} "
            f"with bracket [{lo:.6g}, {hi:.6g}]"
        )
    return x
