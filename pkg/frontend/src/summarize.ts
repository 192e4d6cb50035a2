import { loadManifest } from "./data.js";

export interface SummaryRow {
  name: string;
  final_metric: number;
  oracle_total: number;
  wall_s: number;
}

export interface Summary {
  rows: SummaryRow[];
  warnings: string[];
}

/** Per-method final metric, oracle totals and wall time, sorted ascending by
 * the final metric.  Methods with errors or non-finite finals are excluded. */
export async function summarize(manifestPath: string): Promise<Summary> {
  const manifest = await loadManifest(manifestPath);
  const warnings: string[] = [];
  const rows: SummaryRow[] = [];
  for (const m of manifest.methods) {
    const label = m.label ?? m.name;
    if (m.status !== "ok") {
      warnings.push(`excluding ${label}: ${m.status}`);
      continue;
    }
    const final = m.final_metric;
    if (final === undefined || final === null || !Number.isFinite(final)) {
      warnings.push(`excluding ${label}: final metric is not finite`);
      continue;
    }
    rows.push({
      name: label,
      final_metric: final,
      oracle_total: m.oracle_total ?? (m.op_evals ?? 0) + (m.jvp_evals ?? 0),
      wall_s: m.wall_s ?? 0,
    });
  }
  rows.sort((a, b) => a.final_metric - b.final_metric);
  return { rows, warnings };
}

export function formatSummary(summary: Summary, metricName = "final metric"): string {
  const header = ["method", metricName, "oracle calls", "wall (s)"];
  const body = summary.rows.map((r) => [
    r.name,
    r.final_metric.toExponential(3),
    String(r.oracle_total),
    r.wall_s.toFixed(2),
  ]);
  const table = [header, ...body];
  const widths = header.map((_, c) => Math.max(...table.map((row) => row[c].length)));
  return table
    .map((row) => row.map((cell, c) => cell.padEnd(widths[c])).join("  ").trimEnd())
    .join("\n");
}
