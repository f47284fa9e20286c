"""Built-in property suites for a quick health check of the numeric core.

Runs dependency-free versions of the projection, minimizer, inverse-map,
schedule, seeding, and statistics checks; the service and CLI expose it as
the ``selftest`` surface.
"""

from __future__ import annotations

import math

import numpy as np

from .algorithms import make_schedule
from .geometry import (
    MirrorMap,
    RegularizedObjective,
    TruncatedSimplex,
    is_divergence,
    log_barrier,
    oracle_minimizer,
    project,
)
from .harness import derive_rep_seed
from .inference import kolmogorov_survival, ks_statistic, normal_cdf, normal_quantile

_ALPHAS = (0.0, 0.3, 1.0 / 3.0, 0.5, 1.0)


def _check_projection(rng) -> tuple[bool, str]:
    worst_feas, worst_pyth = 0.0, 0.0
    for _ in range(60):
        alpha = float(rng.choice(_ALPHAS))
        K = int(rng.integers(2, 6))
        eps = float(rng.uniform(0.01, 0.9 / K))
        dom = TruncatedSimplex(K, eps)
        m = MirrorMap(alpha)
        z = rng.uniform(1e-3, 1.0, size=K)
        x = project(m, z, dom)
        worst_feas = max(worst_feas, eps - x.min(), abs(x.sum() - 1.0))
        w = rng.dirichlet(np.ones(K))
        y = eps + (1.0 - K * eps) * w
        slack = m.bregman(y, z) - m.bregman(y, x) - m.bregman(x, z)
        worst_pyth = max(worst_pyth, -slack)
    ok = worst_feas <= 1e-9 and worst_pyth <= 1e-8
    return ok, f"feasibility residual {worst_feas:.2e}, pythagorean slack {worst_pyth:.2e}"


def _check_minimizer(rng) -> tuple[bool, str]:
    worst_gap, worst_sum = 0.0, 0.0
    for _ in range(20):
        K = int(rng.integers(2, 5))
        eps = float(rng.uniform(0.01, 0.4 / K))
        lam = float(rng.uniform(1e-4, 0.2))
        mu = rng.uniform(0.0, 1.0, size=K)
        dom = TruncatedSimplex(K, eps)
        obj = RegularizedObjective(mu, lam, eps)
        xs = oracle_minimizer(obj, dom)
        worst_sum = max(worst_sum, abs(xs.sum() - 1.0))
        fs = obj.value(xs)
        for _ in range(200):
            y = eps + (1.0 - K * eps) * rng.dirichlet(np.ones(K))
            worst_gap = max(worst_gap, fs - obj.value(y))
    ok = worst_gap <= 1e-9 and worst_sum <= 1e-9
    return ok, f"optimality violation {worst_gap:.2e}, sum residual {worst_sum:.2e}"


def _check_inverse_maps(rng) -> tuple[bool, str]:
    worst = 0.0
    for alpha in _ALPHAS:
        m = MirrorMap(alpha)
        x = rng.uniform(0.02, 2.0, size=500)
        worst = max(worst, float(np.abs(m.grad_inverse(m.grad(x)) - x).max()))
    return worst <= 1e-10, f"round-trip error {worst:.2e}"


def _check_divergences(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(0.01, 1.0, size=3)
        y = rng.uniform(0.01, 1.0, size=3)
        d_psi = log_barrier(x) - log_barrier(y) - float((-1.0 / y) @ (x - y))
        worst = max(worst, abs(is_divergence(x, y) - d_psi))
    return worst <= 1e-12, f"barrier-divergence identity residual {worst:.2e}"


def _check_schedule(_) -> tuple[bool, str]:
    s = make_schedule(100_000, 3, 1.0)
    ok = (
        abs(s.eta - 1.0 / math.sqrt(100_000)) < 1e-15
        and abs(s.epsilon - math.log(100_000) / math.sqrt(100_000)) < 1e-15
        and abs(s.lam - s.gamma / math.sqrt(3 * 100_000)) < 1e-15
    )
    c = make_schedule(10_000, 3, 1.0, mode="corrupted", beta=0.3)
    ok = ok and abs(c.epsilon - 10_000 ** (-0.2) / math.sqrt(3)) < 1e-15 and c.lam == c.epsilon
    return ok, "schedule formulas"


def _check_seed_derivation(_) -> tuple[bool, str]:
    s = 0xDEADBEEF12345678
    seen = {derive_rep_seed(s, i) for i in range(50_000)}
    stable = all(derive_rep_seed(s, i) == derive_rep_seed(s, i) for i in range(100))
    return len(seen) == 50_000 and stable, f"{len(seen)} distinct stream seeds of 50000"


def _check_statistics(rng) -> tuple[bool, str]:
    n = 1000
    qs = [normal_quantile((i - 0.5) / n) for i in range(1, n + 1)]
    d, p = ks_statistic(qs)
    worst_q = max(
        abs(normal_cdf(normal_quantile(pp)) - pp) for pp in (0.001, 0.1, 0.5, 0.9, 0.999)
    )
    ok = d < 0.002 and p > 0.999 and worst_q < 1e-12 and kolmogorov_survival(0.1) == 1.0
    return ok, f"plug-in KS {d:.2e}, quantile round-trip {worst_q:.2e}"


CHECKS = [
    ("projection", _check_projection),
    ("minimizer", _check_minimizer),
    ("inverse-maps", _check_inverse_maps),
    ("divergences", _check_divergences),
    ("schedule", _check_schedule),
    ("seed-derivation", _check_seed_derivation),
    ("statistics", _check_statistics),
]


def run_selftest(seed: int = 20240817) -> dict:
    """Run every check; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append({"name": name, "ok": bool(ok), "detail": detail})
    return {"ok": all(r["ok"] for r in results), "checks": results}
