"""Acceptance suite: every gating criterion at its stated tolerance.

Each test prints exactly one CRITERION line (run with ``pytest -s -v`` to see
them as they happen). The heavy Monte-Carlo sweeps are shared module-scoped
fixtures so the whole suite stays in the minutes range single-threaded.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from mirror_bandit_lab.algorithms import make_schedule
from mirror_bandit_lab.engine import run_episodes
from mirror_bandit_lab.environment import BanditModel
from mirror_bandit_lab.geometry import (
    MirrorMap,
    RegularizedObjective,
    TruncatedSimplex,
    is_divergence,
    oracle_minimizer,
    project,
)
from mirror_bandit_lab.harness import ExperimentConfig, derive_rep_seed, run_monte_carlo
from mirror_bandit_lab.inference import ks_statistic, normal_quantile
from oracles import random_in_truncated_simplex, solver_project

FIXTURES = Path(__file__).parent / "fixtures"


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"CRITERION {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def _sweep(mu, alpha, T, reps, seed, algo="reg-exp3", strategy="none", beta=None,
           mode="uncorrupted"):
    model = BanditModel.create(mu)
    sch = make_schedule(T, len(mu), alpha, mode, beta)
    cap = len(mu) * float(T) ** beta if strategy != "none" else 0.0
    fields = {k: [] for k in ("pulls", "mean", "m2", "xbar", "regret", "spent")}
    t0 = time.perf_counter()
    for lo in range(0, reps, 128):
        seeds = [derive_rep_seed(seed, r) for r in range(lo, min(lo + 128, reps))]
        res = run_episodes(model, sch, algo, seeds, strategy=strategy, budget_cap=cap)
        for k in fields:
            fields[k].append(getattr(res, k))
    out = {k: np.concatenate(v) for k, v in fields.items()}
    out["elapsed"] = time.perf_counter() - t0
    out["schedule"] = sch
    out["mu"] = np.asarray(mu, dtype=float)
    return out


def _std_errors(run, arm):
    pulls, mean, m2 = run["pulls"][:, arm], run["mean"][:, arm], run["m2"][:, arm]
    usable = (pulls >= 2) & (m2 > 0.0)
    se = np.sqrt(pulls[usable]) * (mean[usable] - run["mu"][arm]) / np.sqrt(
        m2[usable] / pulls[usable]
    )
    return se, int((~usable).sum())


@pytest.fixture(scope="module")
def clean_unique():
    return _sweep([0.9, 0.3, 0.1], 1.0, 20_000, 500, 12345)


@pytest.fixture(scope="module")
def clean_tied():
    return _sweep([0.7, 0.7, 0.7], 0.5, 20_000, 500, 54321)


@pytest.fixture(scope="module")
def corrupted_run():
    return _sweep(
        [0.9, 0.3, 0.1], 1.0, 20_000, 500, 777,
        strategy="flip-best", beta=0.3, mode="corrupted",
    )


def test_coverage_nominal_alignment(clean_unique):
    run = clean_unique
    ok = True
    details = []
    for level in (0.90, 0.95):
        z = normal_quantile(0.5 * (1.0 + level))
        for a in range(3):
            var = run["m2"][:, a] / run["pulls"][:, a]
            half = z * np.sqrt(var / run["pulls"][:, a])
            cov = float(
                np.mean(
                    (run["mean"][:, a] - half <= run["mu"][a])
                    & (run["mu"][a] <= run["mean"][:, a] + half)
                )
            )
            ok &= abs(cov - level) <= 0.03
            details.append(f"arm{a}@{level:.2f}={cov:.3f}")
    runtime_ok = run["elapsed"] <= 300.0
    ok &= runtime_ok
    _report(
        "coverage",
        ok,
        f"{', '.join(details)}; sweep {run['elapsed']:.0f}s (limit 300s)",
    )
    assert ok


def test_stability_with_tied_optima(clean_tied):
    run = clean_tied
    T = run["schedule"].T
    ratio = run["pulls"] / (T / 3.0)
    means = ratio.mean(axis=0)
    sds = ratio.std(axis=0)
    mean_ok = bool(np.all((means >= 0.95) & (means <= 1.05)))
    sd_ok = bool(np.all(sds <= 0.15))
    _report(
        "stability-tied-optima",
        mean_ok and sd_ok,
        f"mean ratios {np.round(means, 4).tolist()} (need [0.95,1.05]); "
        f"sd {np.round(sds, 4).tolist()} (need <= 0.15)",
    )
    assert mean_ok
    assert sd_ok


def test_normality_standardized_errors(clean_unique, clean_tied):
    ok = True
    details = []
    for tag, run in (("unique", clean_unique), ("tied", clean_tied)):
        reps = run["pulls"].shape[0]
        for a in range(3):
            se, excluded = _std_errors(run, a)
            d, _ = ks_statistic(se)
            ok &= d <= 0.08 and excluded <= 0.02 * reps
            details.append(f"{tag}/arm{a}: D={d:.4f} excl={excluded}")
    _report("normality", ok, "; ".join(details))
    assert ok


def test_regret_bound_and_sublinearity():
    K = 3
    means = {}
    ok = True
    details = []
    for T in (1_000, 10_000):
        run = _sweep([0.9, 0.3, 0.1], 1.0, T, 100, 4242)
        g = math.log(math.log(T))
        bound = (
            4 * math.sqrt(K) * math.log(K) + 2 * math.sqrt(K) * math.log(T) + g * math.log(T)
        ) * math.sqrt(K * T)
        means[T] = float(run["regret"].mean())
        ok &= means[T] <= bound
        details.append(f"T={T}: regret {means[T]:.0f} <= bound {bound:.0f}")
    lhs = means[10_000] / math.sqrt(10_000)
    rhs = means[1_000] / math.sqrt(1_000) * (math.log(10_000) / math.log(1_000)) * 1.5
    trend_ok = lhs <= rhs
    ok &= trend_ok
    details.append(f"trend {lhs:.2f} <= {rhs:.2f}")
    _report("regret-bound", ok, "; ".join(details))
    assert ok


def test_corrupted_normality_and_regret(corrupted_run):
    run = corrupted_run
    T, K = 20_000, 3
    reps = run["pulls"].shape[0]
    ks_ok = True
    details = []
    for a in range(3):
        se, excluded = _std_errors(run, a)
        d, _ = ks_statistic(se)
        ks_ok &= d <= 0.09 and excluded <= 0.02 * reps
        details.append(f"arm{a}: D={d:.4f}")
    bound = (4 * math.sqrt(K) * math.log(K) + 2 * math.log(T) * T**0.3) * math.sqrt(K * T)
    regret_mean = float(run["regret"].mean())
    regret_ok = regret_mean <= bound
    cap = K * T**0.3
    budget_ok = bool(np.all(run["spent"] <= cap + 1e-9))
    _report(
        "corrupted-normality-and-regret",
        ks_ok and regret_ok and budget_ok,
        f"{'; '.join(details)} (need <= 0.09); regret {regret_mean:.0f} <= {bound:.0f}; "
        f"max spend {run['spent'].max():.2f} <= cap {cap:.2f}",
    )
    assert regret_ok
    assert budget_ok
    assert ks_ok


def test_corruption_contrast():
    fixture = json.loads((FIXTURES / "corruption_contrast.json").read_text())
    required = fixture["required_ratio"]
    T, reps = 20_000, 100
    ucb = _sweep(
        [0.9, 0.3, 0.1], 1.0, T, reps, 999,
        algo="ucb", strategy="targeted-ucb", beta=0.3,
    )
    smd = _sweep(
        [0.9, 0.3, 0.1], 1.0, T, reps, 999,
        algo="reg-exp3", strategy="targeted-ucb", beta=0.3,
    )
    ratio = float(ucb["regret"].mean() / smd["regret"].mean())
    ok = ratio >= required
    _report(
        "corruption-contrast",
        ok,
        f"UCB {ucb['regret'].mean():.0f} vs reg-exp3 {smd['regret'].mean():.0f}: "
        f"ratio {ratio:.2f} (need >= {required}; pilot recorded "
        f"{fixture['pilot']['measured_ratio_vs_uncorrupted_schedule']})",
    )
    assert ok


def test_projection_oracle_equivalence():
    rng = np.random.default_rng(2024)
    alphas = [0.0, 0.3, 1.0 / 3.0, 0.5, 1.0]
    t0 = time.perf_counter()
    worst_gap, worst_pyth = 0.0, 0.0
    for i in range(500):
        K = int(rng.integers(2, 6))
        eps = float(rng.choice([0.01, 0.05, 1.0 / K]))
        alpha = alphas[i % len(alphas)]
        dom = TruncatedSimplex(K, eps)
        m = MirrorMap(alpha)
        z = rng.uniform(0.01, 1.0, size=K)
        x = project(m, z, dom)
        ref = solver_project(m, z, dom)
        worst_gap = max(worst_gap, float(np.abs(x - ref).max()))
        y = random_in_truncated_simplex(rng, dom)
        slack = m.bregman(y, z) - m.bregman(y, x) - m.bregman(x, z)
        worst_pyth = max(worst_pyth, -float(slack))
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-6 and worst_pyth <= 1e-8 and elapsed <= 30.0
    _report(
        "projection-oracle-equivalence",
        ok,
        f"max |ours-oracle| {worst_gap:.2e} (need <= 1e-6); "
        f"pythagorean slack {worst_pyth:.2e} (need <= 1e-8); {elapsed:.1f}s (limit 30s)",
    )
    assert ok


def test_minimizer_small_lam_limit():
    x = oracle_minimizer(
        RegularizedObjective(np.array([0.9, 0.3, 0.1]), 1e-8, 0.01),
        TruncatedSimplex(3, 0.01),
    )
    err = float(np.abs(x - np.array([0.01, 0.01, 0.98])).max())
    ok = err <= 1e-4
    _report("minimizer-limit", ok, f"max deviation {err:.2e} (need <= 1e-4)")
    assert ok


def test_master_equation_diagnostic():
    T, K = 10_000, 3
    run = _sweep([0.9, 0.3, 0.1], 1.0, T, 200, 31337)
    sch = run["schedule"]
    x_star = oracle_minimizer(
        RegularizedObjective(run["mu"], sch.lam, sch.epsilon), sch.domain()
    )
    is_vals = [is_divergence(xb, x_star) for xb in run["xbar"]]
    g = sch.gamma
    bound = 3 * K * math.log(K) / g + K / g**2 + g / math.log(T) ** 2
    mean_is = float(np.mean(is_vals))
    ok = mean_is <= bound
    _report("master-equation", ok, f"mean IS {mean_is:.4f} <= bound {bound:.4f}")
    assert ok


def test_end_to_end_determinism(tmp_path):
    cfg = dict(
        K=3, mu=[0.9, 0.3, 0.1], T=400, reps=160, seed=20240817,
        mode="corrupted", beta=0.3, corruption="flip-best", snapshot_stride=100,
    )
    outputs = []
    for name, workers in (("w1", 1), ("w8", 8), ("again", 1)):
        out = tmp_path / name
        run_monte_carlo(ExperimentConfig.from_dict(cfg), out, workers=workers)
        outputs.append(
            ((out / "runs.csv").read_bytes(), (out / "aggregate.json").read_bytes())
        )
    ok = outputs[0] == outputs[1] == outputs[2]
    _report(
        "determinism",
        ok,
        f"csv {len(outputs[0][0])} bytes and aggregate {len(outputs[0][1])} bytes "
        f"identical across workers 1/8 and reruns",
    )
    assert ok
