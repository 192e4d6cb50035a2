/** Shapes of the solver bench output consumed by this package. */

export interface MethodRecord {
  name: string;
  label?: string;
  csv: string;
  status: string;
  iterations?: number;
  final_metric?: number;
  op_evals?: number;
  jvp_evals?: number;
  oracle_total?: number;
  wall_s?: number;
}

export interface Manifest {
  problem: Record<string, unknown>;
  metric_name: string;
  T?: number;
  sample_every?: number;
  seed?: number;
  methods: MethodRecord[];
}

/** One sampled trace row. Column order in the CSV is fixed by the producer:
 * iter, wall_s, op_evals, jvp_evals, lambda, step_norm, metric_name, metric_value
 */
export interface TraceRow {
  iter: number;
  wall_s: number;
  op_evals: number;
  jvp_evals: number;
  lambda: number;
  step_norm: number;
  metric_name: string;
  metric_value: number;
}

export const TRACE_COLUMNS = [
  "iter",
  "wall_s",
  "op_evals",
  "jvp_evals",
  "lambda",
  "step_norm",
  "metric_name",
  "metric_value",
] as const;
