/** Figure kinds and the harness output schemas this renderer consumes. */

export type FigureKind =
  | "std-error-density"
  | "coverage-diagonal"
  | "pull-proportions"
  | "regret-curve";

export interface FigureSpec {
  kind: FigureKind;
  /** Path to the harness aggregate.json. */
  aggregate: string;
  /** Path to the per-round runs.csv (regret-curve only). */
  rows?: string;
  /** Arm selection; defaults to every arm in the aggregate. */
  arms?: number[];
  /** Output base path: writes `${out}.svg` and `${out}.png`. */
  out: string;
}

export interface PerArmAggregate {
  arm: number;
  mu_true: number;
  pulls_per_rep: number[];
  mean_per_rep: (number | null)[];
  std_errors: (number | null)[];
  std_error_exclusions: number;
}

export interface KsEntry {
  arm: number;
  D: number | null;
  p: number | null;
  n_used: number;
  n_excluded: number;
}

export interface Aggregate {
  config_echo: {
    T: number;
    K: number;
    reps: number;
    mu: number[];
    levels: number[];
    [key: string]: unknown;
  };
  per_arm: PerArmAggregate[];
  coverage_by_level: Record<string, { per_arm: (number | null)[] }>;
  ks: KsEntry[];
  regret: { mean: number | null; sd: number | null; per_rep: number[] };
  stability: {
    n_star: number[] | null;
    [key: string]: unknown;
  };
  [key: string]: unknown;
}

/** Mean/spread of the running pseudo-regret at each round, over reps. */
export interface RegretCurve {
  t: number[];
  mean: number[];
  sd: number[];
  reps: number;
}

export class SchemaError extends Error {}
