"""Vectorized episode executor.

Replications run in lock-step as rows of numpy arrays. Every rep owns an
independent PCG64 stream and consumes exactly K+1 uniforms per round
(K loss draws, then one arm draw), so results are bit-identical whether a
rep runs alone, inside any batch, or under any worker split. The arithmetic
mirrors the scalar reference operations in :mod:`algorithms`,
:mod:`environment`, and :mod:`inference` exactly; tests pin the equivalence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import ALGORITHMS, Schedule
from .environment import BanditModel, CorruptionPolicy, losses_from_uniforms
from .errors import ConfigError
from .geometry import project_batch

# Rounds of uniforms drawn per generator call; amortizes RNG overhead.
_SLAB_ROUNDS = 2048


@dataclass
class BatchResult:
    """Per-rep outcomes of a batch of episodes (rows = reps)."""

    seeds: np.ndarray
    algo: str
    pulls: np.ndarray  # (B, K) int64
    mean: np.ndarray  # (B, K) running means of observed losses
    m2: np.ndarray  # (B, K) sums of squared deviations
    xbar: np.ndarray  # (B, K) time-averaged sampling distribution
    regret: np.ndarray  # (B,) pseudo-regret against the true means
    spent: np.ndarray  # (B,) realized corruption budget
    final_x: np.ndarray  # (B, K)
    arms: np.ndarray | None = None  # (B, T) int16 when recording
    observed: np.ndarray | None = None  # (B, T)
    true_pulled: np.ndarray | None = None  # (B, T)
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)


def run_episodes(
    model: BanditModel,
    schedule: Schedule,
    algo: str,
    seeds,
    strategy: str = "none",
    budget_cap: float = 0.0,
    record: bool = False,
    snapshot_stride: int = 0,
) -> BatchResult:
    """Run one episode per seed, vectorized across the batch."""
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algo!r} (choose from {ALGORITHMS})")
    if model.K != schedule.K:
        raise ConfigError(f"model has K={model.K} arms but schedule has K={schedule.K}")
    T, K = schedule.T, model.K
    seeds = np.asarray(list(seeds), dtype=np.uint64)
    B = seeds.shape[0]
    gens = [np.random.default_rng(int(s)) for s in seeds]

    m = schedule.mirror_map()
    dom = schedule.domain()
    eta, lam, eps = schedule.eta, schedule.lam, schedule.epsilon
    gaps = model.gaps
    best = model.best_arm
    rows = np.arange(B)

    pulls = np.zeros((B, K), dtype=np.int64)
    mean = np.zeros((B, K))
    m2 = np.zeros((B, K))
    xbar = np.zeros((B, K))
    regret = np.zeros(B)
    spent = np.zeros(B)

    smd = algo in ("reg-exp3", "exp3")
    if algo == "reg-exp3":
        z = np.full((B, K), 1.0 / K)
        theta = np.zeros(B)
    elif algo == "exp3":
        x_cur = np.full((B, K), 1.0 / K)

    arms_rec = np.zeros((B, T), dtype=np.int16) if record else None
    obs_rec = np.zeros((B, T)) if record else None
    true_rec = np.zeros((B, T)) if record else None
    snapshots: dict[int, np.ndarray] = {}

    t = 0
    while t < T:
        n = min(_SLAB_ROUNDS, T - t)
        U = np.stack([g.random((n, K + 1)) for g in gens])  # (B, n, K+1)
        for i in range(n):
            t += 1
            u = U[:, i, :]
            true_l = losses_from_uniforms(model, u[:, :K])

            if strategy == "none":
                corr_l = true_l
            else:
                corr_l = true_l.copy()
                if strategy == "flip-best":
                    target = np.full(B, best, dtype=np.int64)
                    ok = np.ones(B, dtype=bool)
                else:  # targeted-ucb
                    ok = (pulls > 0).any(axis=1)
                    masked = np.where(pulls > 0, mean, np.inf)
                    target = np.argmin(masked, axis=1)
                requested = np.where(ok, 1.0 - true_l[rows, target], 0.0)
                remaining = np.maximum(0.0, budget_cap - spent)
                allowed = np.minimum(requested, remaining)
                corr_l[rows, target] += allowed
                spent += allowed

            if algo == "ucb":
                if t <= K:
                    arm = np.full(B, t - 1, dtype=np.int64)
                else:
                    index = mean - np.sqrt(2.0 * math.log(t) / pulls)
                    arm = np.argmin(index, axis=1)
            else:
                if algo == "reg-exp3":
                    x_t, theta = project_batch(m, z, dom, theta)
                else:
                    x_t = x_cur
                cum = np.cumsum(x_t, axis=1)
                arm = np.minimum((cum < u[:, K][:, None]).sum(axis=1), K - 1)
                xbar += x_t

            obs = corr_l[rows, arm]

            if algo == "reg-exp3":
                lhat = np.zeros((B, K))
                lhat[rows, arm] = obs / x_t[rows, arm]
                ltilde = lhat + lam * (1.0 / eps - 1.0 / x_t)
                z = m.grad_inverse(m.grad(x_t) - eta * ltilde)
            elif algo == "exp3":
                x_next = x_t.copy()
                x_next[rows, arm] = x_t[rows, arm] * np.exp(-eta * obs / x_t[rows, arm])
                x_cur = x_next / x_next.sum(axis=1, keepdims=True)

            # single-pass moments; must stay bit-identical to update_moments()
            n_new = pulls[rows, arm] + 1
            delta = obs - mean[rows, arm]
            mean[rows, arm] += delta / n_new
            m2[rows, arm] += delta * (obs - mean[rows, arm])
            pulls[rows, arm] = n_new
            regret += gaps[arm]

            if record:
                arms_rec[:, t - 1] = arm
                obs_rec[:, t - 1] = obs
                true_rec[:, t - 1] = true_l[rows, arm]
            if snapshot_stride and t % snapshot_stride == 0:
                snapshots[t] = x_t.copy() if smd else pulls / t

    if smd:
        xbar = xbar / T
        final_x = x_t.copy() if algo == "reg-exp3" else x_cur.copy()
    else:
        xbar = pulls / T
        final_x = pulls / T

    return BatchResult(
        seeds=seeds,
        algo=algo,
        pulls=pulls,
        mean=mean,
        m2=m2,
        xbar=xbar,
        regret=regret,
        spent=spent,
        final_x=final_x,
        arms=arms_rec,
        observed=obs_rec,
        true_pulled=true_rec,
        snapshots=snapshots,
    )


@dataclass
class Trajectory:
    """One episode's outcome: per-round records plus summary accumulators."""

    T: int
    K: int
    algo: str
    seed: int
    pulls: np.ndarray
    mean: np.ndarray
    m2: np.ndarray
    xbar: np.ndarray
    regret: float
    spent: float
    final_x: np.ndarray
    arms: np.ndarray | None = None
    observed: np.ndarray | None = None
    true_pulled: np.ndarray | None = None
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)


def run_episode(
    algo: str,
    model: BanditModel,
    policy: CorruptionPolicy,
    schedule: Schedule,
    seed: int,
    record: bool = True,
    snapshot_stride: int = 0,
) -> Trajectory:
    """Run a single episode; fully deterministic given the seed.

    The policy instance is owned by this episode: its ``spent`` field holds
    the realized corruption afterwards.
    """
    res = run_episodes(
        model,
        schedule,
        algo,
        seeds=[seed],
        strategy=policy.strategy,
        budget_cap=policy.budget_cap,
        record=record,
        snapshot_stride=snapshot_stride,
    )
    policy.spent = float(res.spent[0])
    return Trajectory(
        T=schedule.T,
        K=model.K,
        algo=algo,
        seed=int(seed),
        pulls=res.pulls[0],
        mean=res.mean[0],
        m2=res.m2[0],
        xbar=res.xbar[0],
        regret=float(res.regret[0]),
        spent=float(res.spent[0]),
        final_x=res.final_x[0],
        arms=res.arms[0] if res.arms is not None else None,
        observed=res.observed[0] if res.observed is not None else None,
        true_pulled=res.true_pulled[0] if res.true_pulled is not None else None,
        snapshots={t: v[0] for t, v in res.snapshots.items()},
    )
