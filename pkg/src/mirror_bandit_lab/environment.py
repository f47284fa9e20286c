"""Stochastic loss generation and the budgeted corruption adversary.

Losses live in [0, 1]. Every arm draws one i.i.d. loss per round from a
single uniform variate, so scalar and batched execution paths can share the
exact same random stream. The adversary distorts the full loss vector before
the learner observes its pulled coordinate, pays the sup-norm of the
distortion out of a hard budget, and degrades to pass-through once the
budget is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

ARM_KINDS = ("bernoulli", "clipped-uniform")
STRATEGIES = ("none", "flip-best", "targeted-ucb")


@dataclass(frozen=True)
class BanditModel:
    """K arms with mean losses ``mu`` and a per-arm distribution tag."""

    mu: np.ndarray
    arm_kind: tuple[str, ...]

    @classmethod
    def create(cls, mu, arm_kind="bernoulli") -> "BanditModel":
        mu = np.asarray(mu, dtype=float)
        if mu.ndim != 1 or mu.shape[0] < 2:
            raise ConfigError("mu must be a vector with at least two arms")
        if np.any((mu < 0.0) | (mu > 1.0)):
            raise ConfigError("mean losses must lie in [0, 1]")
        kinds = (arm_kind,) * mu.shape[0] if isinstance(arm_kind, str) else tuple(arm_kind)
        if len(kinds) != mu.shape[0]:
            raise ConfigError(f"arm_kind has {len(kinds)} tags for {mu.shape[0]} arms")
        for k in kinds:
            if k not in ARM_KINDS:
                raise ConfigError(f"unknown arm kind {k!r} (choose from {ARM_KINDS})")
        return cls(mu=mu, arm_kind=kinds)

    @property
    def K(self) -> int:
        return self.mu.shape[0]

    @property
    def best_arm(self) -> int:
        return int(np.argmin(self.mu))

    @property
    def gaps(self) -> np.ndarray:
        return self.mu - self.mu.min()


def losses_from_uniforms(model: BanditModel, u: np.ndarray) -> np.ndarray:
    """Map uniform(0,1) variates of shape (..., K) to losses in [0, 1].

    Bernoulli arms: loss = 1{u < mu}. Clipped-uniform arms: uniform on
    [mu - h, mu + h] with half-width h = min(1/4, mu, 1 - mu), so the mean
    is exactly mu and the support stays inside [0, 1].
    """
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    for j, kind in enumerate(model.arm_kind):
        mu_j = model.mu[j]
        if kind == "bernoulli":
            out[..., j] = (u[..., j] < mu_j).astype(float)
        else:
            h = min(0.25, mu_j, 1.0 - mu_j)
            out[..., j] = mu_j + (2.0 * u[..., j] - 1.0) * h
    return out


@dataclass
class RoundLosses:
    """True and corrupted loss vectors for one round."""

    true_vector: np.ndarray
    corrupted_vector: np.ndarray
    sup_gap: float = 0.0


@dataclass
class CorruptionPolicy:
    """Adversary strategy plus running budget accounting.

    ``spent`` is the realized sum of sup-norm distortions and never exceeds
    ``budget_cap``; with strategy ``none`` it stays at zero.
    """

    strategy: str
    budget_cap: float = 0.0
    spent: float = 0.0
    best_arm: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r} (choose from {STRATEGIES})")
        if self.budget_cap < 0.0:
            raise ConfigError("budget_cap must be nonnegative")
        if self.strategy == "flip-best" and self.best_arm is None:
            raise ConfigError("flip-best needs the index of the true best arm")

    @classmethod
    def for_model(
        cls, strategy: str, model: BanditModel, T: int, beta: float | None
    ) -> "CorruptionPolicy":
        """Budget cap K * T**beta, the standard tolerated-corruption scale."""
        if strategy == "none":
            return cls(strategy="none")
        if beta is None or not 0.0 < beta < 0.5:
            raise ConfigError("corruption needs beta in (0, 1/2) to set the budget cap")
        return cls(
            strategy=strategy,
            budget_cap=model.K * float(T) ** beta,
            best_arm=model.best_arm,
        )

    @property
    def remaining(self) -> float:
        return max(0.0, self.budget_cap - self.spent)


@dataclass
class RoundContext:
    """What the adversary sees: the round index and the learner's statistics."""

    t: int
    pulls: np.ndarray
    means: np.ndarray


def sample_round(model: BanditModel, rng: np.random.Generator) -> RoundLosses:
    """One i.i.d. loss per arm; consumes exactly K uniforms from rng."""
    true = losses_from_uniforms(model, rng.random(model.K))
    return RoundLosses(true_vector=true, corrupted_vector=true.copy(), sup_gap=0.0)


def _target_arm(policy: CorruptionPolicy, context: RoundContext) -> int | None:
    if policy.strategy == "flip-best":
        return policy.best_arm
    # targeted-ucb: the arm currently believed best; needs at least one pull
    pulled = context.pulls > 0
    if not pulled.any():
        return None
    masked = np.where(pulled, context.means, np.inf)
    return int(np.argmin(masked))


def corrupt(
    policy: CorruptionPolicy, losses: RoundLosses, context: RoundContext
) -> RoundLosses:
    """Apply the strategy, scaling the distortion down to the remaining budget.

    Pushes the targeted coordinate toward loss 1; the result stays in
    [0, 1]^K and ``spent`` grows by the realized sup-norm gap.
    """
    true = losses.true_vector
    if policy.strategy == "none":
        return RoundLosses(true, true.copy(), 0.0)
    target = _target_arm(policy, context)
    if target is None:
        return RoundLosses(true, true.copy(), 0.0)
    requested = 1.0 - true[target]
    allowed = min(requested, policy.remaining)
    corrupted = true.copy()
    corrupted[target] += allowed
    policy.spent += allowed
    return RoundLosses(true, corrupted, float(allowed))


def realized_corruption(policy: CorruptionPolicy) -> float:
    """Realized sum of sup-norm distortions over the episode."""
    return policy.spent
