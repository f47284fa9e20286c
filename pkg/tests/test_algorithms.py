import math

import numpy as np
import pytest

from mirror_bandit_lab.algorithms import (
    LearnerState,
    Schedule,
    exp3_step,
    importance_weighted_loss,
    initial_state,
    initial_ucb_state,
    make_schedule,
    pseudo_regret,
    reg_exp3_step,
    sample_arm,
    ucb_arm,
    ucb_step,
)
from mirror_bandit_lab.engine import run_episode, run_episodes
from mirror_bandit_lab.environment import (
    BanditModel,
    CorruptionPolicy,
    RoundContext,
    corrupt,
    sample_round,
)
from mirror_bandit_lab.errors import ConfigError
from mirror_bandit_lab.geometry import MirrorMap


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


def test_schedule_standard_values():
    s = make_schedule(100_000, 3, 1.0)
    assert s.eta == pytest.approx(0.003162277660168379, abs=1e-15)
    assert s.epsilon == pytest.approx(0.036407067001059, abs=1e-12)
    assert s.gamma == pytest.approx(2.443470357682056, abs=1e-12)
    assert s.lam == pytest.approx(0.004461146111658929, abs=1e-12)
    assert s.mode == "uncorrupted"


def test_schedule_gamma_default_depends_on_alpha():
    T = 100_000
    lo = make_schedule(T, 3, 0.2)
    hi = make_schedule(T, 3, 0.5)
    assert lo.gamma == pytest.approx(math.log(T) * math.log(math.log(T)))
    assert hi.gamma == pytest.approx(math.log(math.log(T)))
    assert lo.gamma > hi.gamma


def test_schedule_gamma_override():
    s = make_schedule(10_000, 3, 1.0, gamma_override=3.5)
    assert s.gamma == 3.5
    assert s.lam == pytest.approx(3.5 / math.sqrt(3 * 10_000))


def test_schedule_corrupted_values():
    s = make_schedule(10_000, 3, 1.0, mode="corrupted", beta=0.3)
    assert s.eta == pytest.approx(0.01)
    assert s.epsilon == pytest.approx(0.09150385113042292, abs=1e-12)
    assert s.lam == s.epsilon
    assert s.beta == 0.3


def test_schedule_infeasible_horizon():
    with pytest.raises(ConfigError, match="feasible"):
        make_schedule(100, 10, 1.0)
    with pytest.raises(ConfigError):
        make_schedule(3, 3, 1.0)
    with pytest.raises(ConfigError):
        make_schedule(10_000, 3, 1.0, mode="corrupted", beta=0.7)
    with pytest.raises(ConfigError):
        make_schedule(10_000, 3, 1.0, mode="corrupted")


# ---------------------------------------------------------------------------
# importance weighting and arm sampling
# ---------------------------------------------------------------------------


def test_iw_loss_zero_observation():
    np.testing.assert_array_equal(
        importance_weighted_loss(np.array([0.5, 0.5]), 0, 0.0), [0.0, 0.0]
    )


def test_iw_loss_hand_value():
    np.testing.assert_allclose(
        importance_weighted_loss(np.array([0.5, 0.3, 0.2]), 1, 0.6), [0.0, 2.0, 0.0]
    )


def test_iw_loss_unbiased_monte_carlo():
    rng = np.random.default_rng(99)
    x = np.array([0.5, 0.3, 0.2])
    loss_vec = np.array([0.8, 0.4, 0.6])
    n = 1_000_000
    arms = rng.choice(3, size=n, p=x)
    acc = np.zeros(3)
    np.add.at(acc, arms, loss_vec[arms] / x[arms])
    np.testing.assert_allclose(acc / n, loss_vec, atol=5e-3)


def test_sample_arm_inverse_cdf():
    x = np.array([0.2, 0.5, 0.3])
    assert sample_arm(x, 0.1) == 0
    assert sample_arm(x, 0.3) == 1
    assert sample_arm(x, 0.9) == 2
    assert sample_arm(x, 1.0 - 1e-16) == 2


# ---------------------------------------------------------------------------
# learner steps
# ---------------------------------------------------------------------------


def _plain_schedule(T=10_000, K=3, alpha=1.0, lam=None, epsilon=None):
    base = make_schedule(T, K, alpha)
    kwargs = dict(
        T=base.T, K=base.K, alpha=base.alpha, eta=base.eta,
        epsilon=base.epsilon if epsilon is None else epsilon,
        lam=base.lam if lam is None else lam, gamma=base.gamma, mode=base.mode,
    )
    return Schedule(**kwargs)


def test_reg_exp3_step_matches_exponential_weights_when_unregularized():
    # lam = 0, entropy map, truncation loose enough that no clip activates
    sch = _plain_schedule(lam=0.0, epsilon=1e-9)
    m = MirrorMap(1.0)
    state = initial_state(sch)
    for arm, loss in [(0, 0.7), (2, 0.3), (1, 1.0), (0, 0.0)]:
        direct = exp3_step(state.x, sch.eta, (arm, loss))
        state = reg_exp3_step(state, sch, m, (arm, loss))
        np.testing.assert_allclose(state.x, direct, atol=1e-10)


def test_reg_exp3_step_zero_loss_is_noop_without_regularization():
    sch = _plain_schedule(lam=0.0)
    state = initial_state(sch)
    nxt = reg_exp3_step(state, sch, MirrorMap(1.0), (1, 0.0))
    np.testing.assert_allclose(nxt.x, state.x, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_reg_exp3_step_stays_feasible(alpha):
    sch = make_schedule(400, 3, alpha)
    m = MirrorMap(alpha)
    state = initial_state(sch)
    rng = np.random.default_rng(3)
    for _ in range(200):
        arm = sample_arm(state.x, rng.random())
        state = reg_exp3_step(state, sch, m, (arm, rng.random()))
        assert np.all(state.x >= sch.epsilon - 1e-12)
        assert abs(state.x.sum() - 1.0) <= 1e-9
        # regularized loss estimate keeps the dual point dominated
        assert np.all(m.grad(state.z) <= m.grad(state.x) + 1e-9)


def test_ucb_initial_sweep_and_hand_index():
    state = initial_ucb_state(2)
    assert ucb_arm(state) == 0
    state = ucb_step(state, (0, 0.2))
    assert ucb_arm(state) == 1
    state = ucb_step(state, (1, 0.8))
    # bring both arms to 5 pulls with constant losses 0.2 / 0.8, then t = 11
    for _ in range(4):
        state = ucb_step(state, (0, 0.2))
        state = ucb_step(state, (1, 0.8))
    assert state.t == 11
    # indices mu_hat - sqrt(2 ln t / n)
    assert 0.2 - math.sqrt(2 * math.log(11) / 5) == pytest.approx(-0.7793661772388039)
    assert 0.8 - math.sqrt(2 * math.log(11) / 5) == pytest.approx(-0.17936617723880388)
    assert ucb_arm(state) == 0


def test_ucb_tie_breaks_to_lowest_arm():
    state = initial_ucb_state(3)
    for arm in range(3):
        state = ucb_step(state, (arm, 0.5))
    assert ucb_arm(state) == 0


# ---------------------------------------------------------------------------
# pseudo-regret
# ---------------------------------------------------------------------------


class _Traj:
    def __init__(self, pulls):
        self.pulls = np.asarray(pulls)


def test_pseudo_regret_examples():
    mu = np.array([0.9, 0.3, 0.1])
    assert pseudo_regret(_Traj([0, 0, 7]), mu) == 0.0
    # one pull of arm 0 and two of arm 2
    assert pseudo_regret(_Traj([1, 0, 2]), mu) == pytest.approx(0.8)
    rng = np.random.default_rng(5)
    for _ in range(20):
        pulls = rng.integers(0, 50, size=3)
        assert pseudo_regret(_Traj(pulls), mu) >= 0.0


# ---------------------------------------------------------------------------
# episodes: determinism and reference equivalence
# ---------------------------------------------------------------------------


def test_run_episode_deterministic_and_counts():
    model = BanditModel.create([0.9, 0.3, 0.1])
    sch = make_schedule(500, 3, 1.0)
    pol = CorruptionPolicy(strategy="none")
    t1 = run_episode("reg-exp3", model, pol, sch, seed=42)
    t2 = run_episode("reg-exp3", model, CorruptionPolicy(strategy="none"), sch, seed=42)
    assert np.array_equal(t1.arms, t2.arms)
    assert np.array_equal(t1.observed, t2.observed)
    assert t1.regret == t2.regret
    assert int(t1.pulls.sum()) == 500


@pytest.mark.parametrize("algo", ["reg-exp3", "exp3", "ucb"])
def test_engine_batch_rows_equal_single_runs(algo):
    model = BanditModel.create([0.9, 0.3, 0.1])
    sch = make_schedule(300, 3, 0.5)
    seeds = [7, 8, 9]
    full = run_episodes(model, sch, algo, seeds, record=True)
    for i, s in enumerate(seeds):
        one = run_episodes(model, sch, algo, [s], record=True)
        for f in ("pulls", "mean", "m2", "xbar", "regret", "spent", "final_x"):
            np.testing.assert_array_equal(getattr(one, f)[0], getattr(full, f)[i])
        np.testing.assert_array_equal(one.arms[0], full.arms[i])


def test_engine_matches_scalar_composition_bitwise():
    # the vectorized engine must reproduce the scalar reference operations
    # exactly, including corruption accounting and moment updates
    model = BanditModel.create([0.9, 0.3, 0.1])
    T = 400
    sch = make_schedule(T, 3, 1.0)
    m = MirrorMap(1.0)
    seed = 1234
    cap = 3 * T**0.3

    batch = run_episodes(
        model, sch, "reg-exp3", [seed], strategy="flip-best", budget_cap=cap, record=True
    )

    rng = np.random.default_rng(seed)
    policy = CorruptionPolicy(strategy="flip-best", budget_cap=cap, best_arm=model.best_arm)
    state = initial_state(sch)
    pulls = np.zeros(3, dtype=np.int64)
    mean = np.zeros(3)
    m2 = np.zeros(3)
    regret = 0.0
    gaps = model.gaps
    x_played = None
    for t in range(1, T + 1):
        losses = sample_round(model, rng)
        ctx = RoundContext(t=t, pulls=pulls, means=mean)
        out = corrupt(policy, losses, ctx)
        u_arm = rng.random()
        arm = sample_arm(state.x, u_arm)
        obs = out.corrupted_vector[arm]
        assert arm == batch.arms[0, t - 1]
        assert obs == batch.observed[0, t - 1]
        x_played = state.x
        state = reg_exp3_step(state, sch, m, (arm, obs))
        n_new = pulls[arm] + 1
        delta = obs - mean[arm]
        mean[arm] += delta / n_new
        m2[arm] += delta * (obs - mean[arm])
        pulls[arm] = n_new
        regret += gaps[arm]

    np.testing.assert_array_equal(pulls, batch.pulls[0])
    np.testing.assert_array_equal(mean, batch.mean[0])
    np.testing.assert_array_equal(m2, batch.m2[0])
    np.testing.assert_array_equal(x_played, batch.final_x[0])
    np.testing.assert_array_equal(state.xbar_accum / T, batch.xbar[0])
    assert regret == batch.regret[0]
    assert policy.spent == batch.spent[0]


def test_strategy_none_identical_to_no_corruption_layer():
    model = BanditModel.create([0.9, 0.3, 0.1])
    sch = make_schedule(300, 3, 1.0)
    a = run_episodes(model, sch, "reg-exp3", [5], strategy="none", record=True)
    b = run_episodes(model, sch, "reg-exp3", [5], record=True)
    np.testing.assert_array_equal(a.arms[0], b.arms[0])
    np.testing.assert_array_equal(a.observed[0], b.observed[0])
    assert a.spent[0] == 0.0


def test_exp3_reduction_trajectory():
    # reg-exp3 with lam = 0, entropy map, vanishing truncation follows the
    # plain exponential-weights trajectory on the same random stream
    model = BanditModel.create([0.9, 0.3, 0.1])
    T = 300
    base = make_schedule(T, 3, 1.0)
    loose = Schedule(
        T=T, K=3, alpha=1.0, eta=base.eta, epsilon=1e-12, lam=0.0,
        gamma=base.gamma, mode="uncorrupted",
    )
    a = run_episodes(model, loose, "reg-exp3", [21], record=True, snapshot_stride=1)
    b = run_episodes(model, loose, "exp3", [21], record=True, snapshot_stride=1)
    assert np.array_equal(a.arms[0], b.arms[0])
    for t in a.snapshots:
        np.testing.assert_allclose(a.snapshots[t][0], b.snapshots[t][0], atol=1e-8)


def test_snapshot_stride_records_played_distributions():
    model = BanditModel.create([0.9, 0.3, 0.1])
    sch = make_schedule(400, 3, 1.0)
    res = run_episodes(model, sch, "reg-exp3", [3], snapshot_stride=100)
    assert sorted(res.snapshots) == [100, 200, 300, 400]
    for v in res.snapshots.values():
        assert np.all(v[0] >= sch.epsilon - 1e-12)
        assert v[0].sum() == pytest.approx(1.0, abs=1e-9)


def test_tied_arms_pull_symmetry():
    # identical arms: mean pull counts agree across arms to within 2%
    model = BanditModel.create([0.7, 0.7, 0.7])
    sch = make_schedule(2000, 3, 0.5)
    res = run_episodes(model, sch, "reg-exp3", list(range(300)))
    mean_pulls = res.pulls.mean(axis=0)
    assert mean_pulls.max() / mean_pulls.min() < 1.02


def test_ucb_beats_mirror_descent_in_clean_two_arm_bandit():
    model = BanditModel.create([0.1, 0.9])
    sch = make_schedule(10_000, 2, 1.0)
    seeds = list(range(100))
    ucb = run_episodes(model, sch, "ucb", seeds)
    smd = run_episodes(model, sch, "reg-exp3", seeds)
    assert ucb.regret.mean() < smd.regret.mean()
