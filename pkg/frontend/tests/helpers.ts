/** Synthetic aggregate builders for unit tests. */

import { Aggregate } from "../src/types";

export interface SyntheticOptions {
  K?: number;
  T?: number;
  reps?: number;
  levels?: number[];
  /** empirical coverage per level per arm; defaults to the nominal level */
  coverage?: (level: number, arm: number) => number;
  stdErrors?: (arm: number) => (number | null)[];
}

export function makeAggregate(opts: SyntheticOptions = {}): Aggregate {
  const K = opts.K ?? 3;
  const T = opts.T ?? 1000;
  const reps = opts.reps ?? 40;
  const levels = opts.levels ?? [0.75, 0.85, 0.95];
  const stdErrors =
    opts.stdErrors ??
    ((arm: number) =>
      Array.from({ length: reps }, (_, r) => Math.sin(arm + 1 + r * 0.7) * 1.2));
  const coverage = opts.coverage ?? ((level: number) => level);

  const per_arm = Array.from({ length: K }, (_, a) => {
    const errs = stdErrors(a);
    return {
      arm: a,
      mu_true: 0.1 + 0.2 * a,
      pulls_per_rep: Array.from({ length: reps }, (_, r) => 100 + 10 * a + (r % 7)),
      mean_per_rep: Array.from({ length: reps }, () => 0.1 + 0.2 * a),
      std_errors: errs,
      std_error_exclusions: errs.filter((v) => v === null).length,
    };
  });
  const coverage_by_level: Record<string, { per_arm: (number | null)[] }> = {};
  for (const l of levels) {
    coverage_by_level[String(l)] = {
      per_arm: Array.from({ length: K }, (_, a) => coverage(l, a)),
    };
  }
  return {
    config_echo: { T, K, reps, mu: per_arm.map((e) => e.mu_true), levels },
    per_arm,
    coverage_by_level,
    ks: per_arm.map((e) => {
      const usable = e.std_errors.filter((v) => v !== null).length;
      return {
        arm: e.arm,
        D: usable ? 0.042 + 0.001 * e.arm : null,
        p: usable ? 0.5 : null,
        n_used: usable,
        n_excluded: e.std_errors.length - usable,
      };
    }),
    regret: {
      mean: 12.5,
      sd: 1.5,
      per_rep: Array.from({ length: reps }, (_, r) => 12.0 + 0.1 * (r % 10)),
    },
    stability: { n_star: Array.from({ length: K }, (_, a) => (T / K) * (1 + 0.01 * a)) },
    corruption_spent: { mean: 0, max: 0, per_rep: Array(reps).fill(0) },
    failed_reps: { count: 0, reps: [], errors: [] },
  } as Aggregate;
}

export function emptyAggregate(): Aggregate {
  const agg = makeAggregate({ reps: 0 });
  agg.regret.per_rep = [];
  for (const e of agg.per_arm) {
    e.pulls_per_rep = [];
    e.mean_per_rep = [];
    e.std_errors = [];
  }
  return agg;
}
