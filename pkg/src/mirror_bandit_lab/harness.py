"""Experiment configuration, deterministic seeding, Monte-Carlo execution,
aggregation, and CSV/JSON persistence.

Determinism contract: (config, seed) fully determines every output byte.
Replications are chunked into fixed-size batches by rep index; a worker pool
may execute batches concurrently, but each rep's stream depends only on
``derive_rep_seed(seed, rep)`` and aggregation folds results in rep order,
so the worker count never changes any output.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .algorithms import ALGORITHMS, MODES, Schedule, make_schedule
from .engine import BatchResult, run_episodes
from .environment import ARM_KINDS, STRATEGIES, BanditModel, CorruptionPolicy
from .errors import ConfigError, NumericError
from .inference import (
    ks_statistic,
    stability_report,
    standardized_errors_with_exclusions,
    stats_from_arrays,
    wald_ci,
)

# Reps per engine batch; fixed so outputs never depend on the worker count.
INTERNAL_BATCH = 128

CSV_HEADER = "rep,t,arm,loss_observed,loss_true,regret_running,x_snapshot_json"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_rep_seed(master_seed: int, rep_index: int) -> int:
    """Stateless 64-bit stream-seed derivation.

    XORs the master seed with the rep index times the golden-ratio increment,
    then applies two multiply-xorshift rounds (the splitmix64 finalizer).
    The finalizer is bijective and the increment is odd, so the map is
    injective in the rep index for a fixed master seed.
    """
    if rep_index < 0:
        raise ConfigError("rep_index must be nonnegative")
    z = (master_seed ^ ((rep_index * _GOLDEN) & _MASK64)) & _MASK64
    z ^= z >> 30
    z = (z * _MIX1) & _MASK64
    z ^= z >> 27
    z = (z * _MIX2) & _MASK64
    z ^= z >> 31
    return z


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One experiment: model, algorithm, schedule knobs, and output options."""

    K: int
    mu: list[float]
    T: int
    algorithm: str = "reg-exp3"
    alpha: float = 1.0
    mode: str = "uncorrupted"
    beta: float | None = None
    arm_kind: str | list[str] = "bernoulli"
    reps: int = 1
    seed: int = 0
    corruption: str = "none"
    out_dir: str | None = None
    snapshot_stride: int = 1000
    levels: list[float] = field(default_factory=lambda: [0.9, 0.95])
    directions: list[list[float]] | None = None
    gamma_override: float | None = None

    def validate(self) -> "ExperimentConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.corruption not in STRATEGIES:
            raise ConfigError(f"unknown corruption strategy {self.corruption!r}")
        if len(self.mu) != self.K:
            raise ConfigError(f"mu has {len(self.mu)} entries for K={self.K}")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.T < 4:
            raise ConfigError(f"T must be >= 4, got {self.T}")
        if self.snapshot_stride < 1:
            raise ConfigError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        for lv in self.levels:
            if not 0.0 < lv < 1.0:
                raise ConfigError(f"confidence level {lv} outside (0, 1)")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ConfigError("seed must fit in 64 bits")
        if self.directions is not None:
            for u in self.directions:
                if len(u) != self.K:
                    raise ConfigError("every direction vector needs K entries")
        if self.corruption != "none" and self.beta is None:
            raise ConfigError("corruption needs beta in (0, 1/2) to set the budget cap")
        # constructing these surfaces the remaining invariants
        self.model()
        self.schedule()
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"K", "mu", "T"} - set(d)
        if missing:
            raise ConfigError(f"missing required config keys: {sorted(missing)}")
        try:
            return cls(**d).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be a JSON object in {path}")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def model(self) -> BanditModel:
        return BanditModel.create(self.mu, self.arm_kind)

    def schedule(self) -> Schedule:
        return make_schedule(
            self.T, self.K, self.alpha, self.mode, self.beta, self.gamma_override
        )

    def budget_cap(self) -> float:
        if self.corruption == "none":
            return 0.0
        return CorruptionPolicy.for_model(
            self.corruption, self.model(), self.T, self.beta
        ).budget_cap


# ---------------------------------------------------------------------------
# per-rep summaries
# ---------------------------------------------------------------------------


def _summarize_rep(
    config: ExperimentConfig,
    schedule: Schedule,
    res: BatchResult,
    row: int,
    rep: int,
    wall_time: float,
) -> dict:
    model_mu = np.asarray(config.mu, dtype=float)
    stats = stats_from_arrays(res.pulls[row], res.mean[row], res.m2[row])
    K = config.K

    per_arm = []
    for a in range(K):
        st = stats[a]
        entry: dict = {
            "arm": a,
            "mu_true": float(model_mu[a]),
            "pulls": st.n,
            "mean": st.mean if st.n >= 1 else None,
            "variance": st.variance if st.n >= 1 else None,
        }
        if st.n >= 2 and st.std > 0.0:
            entry["std_error"] = math.sqrt(st.n) * (st.mean - model_mu[a]) / st.std
        else:
            entry["std_error"] = None
        cis = {}
        for lv in config.levels:
            if st.n >= 1:
                u = np.zeros(K)
                u[a] = 1.0
                ci = wald_ci(u, stats, lv)
                cis[str(lv)] = [ci.lo, ci.hi]
            else:
                cis[str(lv)] = None
        entry["ci"] = cis
        per_arm.append(entry)

    directions = []
    if config.directions:
        for u_list in config.directions:
            u = np.asarray(u_list, dtype=float)
            d_entry: dict = {"u": list(map(float, u)), "truth": float(u @ model_mu), "ci": {}}
            for lv in config.levels:
                try:
                    ci = wald_ci(u, stats, lv)
                    d_entry["ci"][str(lv)] = [ci.lo, ci.hi]
                except ValueError:
                    d_entry["ci"][str(lv)] = None
            directions.append(d_entry)

    traj_view = SimpleNamespace(xbar=res.xbar[row], pulls=res.pulls[row], T=schedule.T)
    stab = stability_report(traj_view, schedule, model_mu)
    summary = {
        "rep": rep,
        "seed": int(res.seeds[row]),
        "algorithm": config.algorithm,
        "per_arm": per_arm,
        "pseudo_regret": float(res.regret[row]),
        "corruption_spent": float(res.spent[row]),
        "xbar": [float(v) for v in res.xbar[row]],
        "stability": {
            "ratio_pulls": [float(v) for v in stab.ratio_pulls],
            "ratio_oracle": [float(v) for v in stab.ratio_oracle],
            "is_to_oracle": float(stab.is_to_oracle),
            "n_star": [float(v) for v in stab.n_star],
        },
        "wall_time_s": wall_time,
    }
    if directions:
        summary["directions"] = directions
    return summary


def run_single(config: ExperimentConfig, rep_index: int = 0) -> dict:
    """One episode (the given rep of the sweep), summarized."""
    config.validate()
    schedule = config.schedule()
    model = config.model()
    seed = derive_rep_seed(int(config.seed), rep_index)
    t0 = time.perf_counter()
    res = run_episodes(
        model,
        schedule,
        config.algorithm,
        seeds=[seed],
        strategy=config.corruption,
        budget_cap=config.budget_cap(),
        record=False,
        snapshot_stride=0,
    )
    elapsed = time.perf_counter() - t0
    return _summarize_rep(config, schedule, res, 0, rep_index, elapsed)


# ---------------------------------------------------------------------------
# Monte-Carlo sweep
# ---------------------------------------------------------------------------


def _format_float(v: float) -> str:
    return f"{v:.17g}"


def _write_rows(path: Path, config: ExperimentConfig, res: BatchResult, reps: list[int], fmt: str):
    """Per-round rows for every (non-failed) rep of a batch, rep-major."""
    model_mu = np.asarray(config.mu, dtype=float)
    gaps = model_mu - model_mu.min()
    T = config.T
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh) if fmt == "csv" else None
        for row, rep in enumerate(reps):
            arms = res.arms[row]
            observed = res.observed[row]
            true_pulled = res.true_pulled[row]
            running = np.cumsum(gaps[arms])
            snaps = {t: v[row] for t, v in res.snapshots.items()}
            for t in range(1, T + 1):
                snap = snaps.get(t)
                snap_json = (
                    json.dumps([float(v) for v in snap]) if snap is not None else ""
                )
                if fmt == "csv":
                    writer.writerow(
                        (
                            rep,
                            t,
                            int(arms[t - 1]),
                            _format_float(float(observed[t - 1])),
                            _format_float(float(true_pulled[t - 1])),
                            _format_float(float(running[t - 1])),
                            snap_json,
                        )
                    )
                else:
                    fh.write(
                        json.dumps(
                            {
                                "rep": rep,
                                "t": t,
                                "arm": int(arms[t - 1]),
                                "loss_observed": float(observed[t - 1]),
                                "loss_true": float(true_pulled[t - 1]),
                                "regret_running": float(running[t - 1]),
                                "x_snapshot": [float(v) for v in snap]
                                if snap is not None
                                else None,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )


def _run_batch(args) -> dict:
    """Worker task: one batch of contiguous reps. Returns summaries, failures,
    and the part-file path holding this batch's rows (when rows are wanted)."""
    config_dict, rep_lo, rep_hi, part_path, fmt = args
    config = ExperimentConfig.from_dict(config_dict)
    schedule = config.schedule()
    model = config.model()
    cap = config.budget_cap()
    reps = list(range(rep_lo, rep_hi))
    seeds = [derive_rep_seed(int(config.seed), r) for r in reps]
    record = part_path is not None
    stride = config.snapshot_stride if record else 0

    def execute(seed_list):
        return run_episodes(
            model,
            schedule,
            config.algorithm,
            seeds=seed_list,
            strategy=config.corruption,
            budget_cap=cap,
            record=record,
            snapshot_stride=stride,
        )

    summaries: list[dict] = []
    failures: list[dict] = []
    t0 = time.perf_counter()
    try:
        res = execute(seeds)
        elapsed = (time.perf_counter() - t0) / max(1, len(reps))
        ok_reps = reps
    except NumericError:
        # isolate the failing reps without aborting the sweep
        res = None
        ok_rows: list[int] = []
        partials: list[BatchResult] = []
        for i, (rep, seed) in enumerate(zip(reps, seeds)):
            try:
                partials.append(execute([seed]))
                ok_rows.append(i)
            except NumericError as exc:
                failures.append({"rep": rep, "error": str(exc)})
        elapsed = (time.perf_counter() - t0) / max(1, len(reps))
        ok_reps = [reps[i] for i in ok_rows]
        if partials:
            res = _concat_results(partials)
    if res is not None:
        for row, rep in enumerate(ok_reps):
            summaries.append(_summarize_rep(config, schedule, res, row, rep, elapsed))
        if record:
            _write_rows(Path(part_path), config, res, ok_reps, fmt)
        elif part_path is not None:
            Path(part_path).touch()
    elif part_path is not None:
        Path(part_path).touch()
    return {"summaries": summaries, "failures": failures, "part": part_path}


def _concat_results(parts: list[BatchResult]) -> BatchResult:
    def cat(attr):
        vals = [getattr(p, attr) for p in parts]
        return None if vals[0] is None else np.concatenate(vals, axis=0)

    snapshots = {}
    for t in parts[0].snapshots:
        snapshots[t] = np.concatenate([p.snapshots[t] for p in parts], axis=0)
    return BatchResult(
        seeds=np.concatenate([p.seeds for p in parts]),
        algo=parts[0].algo,
        pulls=cat("pulls"),
        mean=cat("mean"),
        m2=cat("m2"),
        xbar=cat("xbar"),
        regret=cat("regret"),
        spent=cat("spent"),
        final_x=cat("final_x"),
        arms=cat("arms"),
        observed=cat("observed"),
        true_pulled=cat("true_pulled"),
        snapshots=snapshots,
    )


def _aggregate(config: ExperimentConfig, summaries: list[dict], failures: list[dict]) -> dict:
    """Deterministic fold over per-rep summaries, ordered by rep index."""
    summaries = sorted(summaries, key=lambda s: s["rep"])
    K = config.K
    mu = np.asarray(config.mu, dtype=float)

    per_arm = []
    ks_entries = []
    for a in range(K):
        pulls = [s["per_arm"][a]["pulls"] for s in summaries]
        means = [s["per_arm"][a]["mean"] for s in summaries]
        std_errors = [s["per_arm"][a]["std_error"] for s in summaries]
        usable = [v for v in std_errors if v is not None]
        excluded = sum(v is None for v in std_errors)
        per_arm.append(
            {
                "arm": a,
                "mu_true": float(mu[a]),
                "pulls_per_rep": pulls,
                "mean_per_rep": means,
                "std_errors": std_errors,
                "std_error_exclusions": excluded,
            }
        )
        if usable:
            d, p = ks_statistic(usable)
            ks_entries.append(
                {"arm": a, "D": d, "p": p, "n_used": len(usable), "n_excluded": excluded}
            )
        else:
            ks_entries.append(
                {"arm": a, "D": None, "p": None, "n_used": 0, "n_excluded": excluded}
            )

    coverage_by_level: dict = {}
    for lv in config.levels:
        key = str(lv)
        arm_cov = []
        for a in range(K):
            hits, total = 0, 0
            for s in summaries:
                ci = s["per_arm"][a]["ci"][key]
                if ci is None:
                    continue
                total += 1
                hits += ci[0] <= mu[a] <= ci[1]
            arm_cov.append(hits / total if total else None)
        entry = {"per_arm": arm_cov}
        if config.directions:
            dir_cov = []
            for i, u_list in enumerate(config.directions):
                truth = float(np.asarray(u_list) @ mu)
                hits, total = 0, 0
                for s in summaries:
                    ci = s["directions"][i]["ci"][key]
                    if ci is None:
                        continue
                    total += 1
                    hits += ci[0] <= truth <= ci[1]
                dir_cov.append(hits / total if total else None)
            entry["directions"] = dir_cov
        coverage_by_level[key] = entry

    regrets = [s["pseudo_regret"] for s in summaries]
    spents = [s["corruption_spent"] for s in summaries]
    ratio_pulls = np.array([s["stability"]["ratio_pulls"] for s in summaries])
    ratio_oracle = np.array([s["stability"]["ratio_oracle"] for s in summaries])
    is_vals = [s["stability"]["is_to_oracle"] for s in summaries]

    def _mean(v):
        return float(np.mean(v)) if len(v) else None

    def _sd(v):
        return float(np.std(v)) if len(v) else None

    return {
        "config_echo": config.to_dict(),
        "per_arm": per_arm,
        "coverage_by_level": coverage_by_level,
        "ks": ks_entries,
        "regret": {"mean": _mean(regrets), "sd": _sd(regrets), "per_rep": regrets},
        "stability": {
            "ratio_pulls_mean": [_mean(ratio_pulls[:, a]) for a in range(K)] if len(summaries) else None,
            "ratio_pulls_sd": [_sd(ratio_pulls[:, a]) for a in range(K)] if len(summaries) else None,
            "ratio_oracle_mean": [_mean(ratio_oracle[:, a]) for a in range(K)] if len(summaries) else None,
            "n_star": summaries[0]["stability"]["n_star"] if summaries else None,
            "is_mean": _mean(is_vals),
        },
        "corruption_spent": {
            "mean": _mean(spents),
            "max": float(np.max(spents)) if spents else None,
            "per_rep": spents,
        },
        "failed_reps": {
            "count": len(failures),
            "reps": [f["rep"] for f in sorted(failures, key=lambda f: f["rep"])],
            "errors": [f["error"] for f in sorted(failures, key=lambda f: f["rep"])],
        },
    }


def run_monte_carlo(
    config: ExperimentConfig,
    out_dir: str | Path,
    workers: int = 1,
    fmt: str = "csv",
    write_rows: bool = True,
) -> dict:
    """Execute the sweep, write per-round rows and the aggregate JSON.

    Returns the aggregate (also written to ``aggregate.json``). Output bytes
    are identical for any worker count.
    """
    config.validate()
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    batches = []
    for b, lo in enumerate(range(0, config.reps, INTERNAL_BATCH)):
        hi = min(lo + INTERNAL_BATCH, config.reps)
        part = out / f".part-{b:05d}.{fmt}" if write_rows else None
        batches.append((config.to_dict(), lo, hi, str(part) if part else None, fmt))

    if workers == 1 or len(batches) == 1:
        results = [_run_batch(b) for b in batches]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, batches))

    summaries = [s for r in results for s in r["summaries"]]
    failures = [f for r in results for f in r["failures"]]

    rows_path = None
    if write_rows:
        rows_path = out / ("runs.csv" if fmt == "csv" else "runs.json")
        with open(rows_path, "w", newline="", encoding="utf-8") as fh:
            if fmt == "csv":
                fh.write(CSV_HEADER + "\n")
            for r in results:
                part = Path(r["part"])
                if part.exists():
                    fh.write(part.read_text(encoding="utf-8"))
                    part.unlink()

    aggregate = _aggregate(config, summaries, failures)
    agg_path = out / "aggregate.json"
    with open(agg_path, "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
    aggregate["_paths"] = {
        "aggregate": str(agg_path),
        "rows": str(rows_path) if rows_path else None,
    }
    return aggregate
