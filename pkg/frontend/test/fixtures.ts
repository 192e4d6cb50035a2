import { promises as fs } from "fs";
import os from "os";
import path from "path";

import { Manifest, MethodRecord, TRACE_COLUMNS } from "../src/types.js";

export async function tmpDir(): Promise<string> {
  return fs.mkdtemp(path.join(os.tmpdir(), "plots-test-"));
}

export function traceCsv(
  iters: number[],
  metric: (k: number) => number,
  opsPerIter = 2,
  metricName = "restricted-gap"
): string {
  const lines = [TRACE_COLUMNS.join(",")];
  for (const k of iters) {
    lines.push(
      [k, 0.0, k * opsPerIter, 0, 0.3, 0.01, metricName, metric(k)].join(",")
    );
  }
  return lines.join("\n") + "\n";
}

export interface FixtureMethod {
  name: string;
  rate?: number;
  rows?: number;
  status?: string;
  final?: number;
  csvContent?: string;
}

/** Write a manifest plus per-method CSVs into a fresh temp dir. */
export async function writeBench(methods: FixtureMethod[]): Promise<string> {
  const dir = await tmpDir();
  const records: MethodRecord[] = [];
  for (const m of methods) {
    const rate = m.rate ?? 1.0;
    const rows = m.rows ?? 20;
    const iters = Array.from({ length: rows }, (_, i) => (i + 1) * 500);
    const metric = (k: number) => Math.pow(k, -rate);
    const csv = m.csvContent ?? traceCsv(iters, metric);
    await fs.writeFile(path.join(dir, `${m.name}.csv`), csv);
    records.push({
      name: m.name,
      csv: `${m.name}.csv`,
      status: m.status ?? "ok",
      iterations: iters[iters.length - 1] ?? 0,
      final_metric: m.final ?? metric(iters[iters.length - 1] ?? 1),
      op_evals: 2 * (iters[iters.length - 1] ?? 0),
      jvp_evals: 0,
      oracle_total: 2 * (iters[iters.length - 1] ?? 0),
      wall_s: 1.5,
    });
  }
  const manifest: Manifest = {
    problem: { kind: "cubic-bilinear", d: 50, rho: 1e-3 },
    metric_name: "restricted-gap",
    T: 10000,
    sample_every: 500,
    seed: 0,
    methods: records,
  };
  await fs.writeFile(path.join(dir, "manifest.json"), JSON.stringify(manifest, null, 2));
  return path.join(dir, "manifest.json");
}
