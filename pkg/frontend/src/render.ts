import { promises as fs } from "fs";
import path from "path";

import { loadManifest, loadTrace } from "./data.js";
import { renderPanel, Series } from "./svg.js";
import { Manifest, TraceRow } from "./types.js";

export interface RenderResult {
  files: string[];
  warnings: string[];
}

interface MethodCurve {
  label: string;
  rows: TraceRow[];
}

async function collectCurves(manifestPath: string, manifest: Manifest, warnings: string[]): Promise<MethodCurve[]> {
  const curves: MethodCurve[] = [];
  for (const method of manifest.methods) {
    const label = method.label ?? method.name;
    if (method.status !== "ok") {
      warnings.push(`skipping ${label}: ${method.status}`);
      continue;
    }
    let rows: TraceRow[];
    try {
      rows = await loadTrace(manifestPath, method.csv);
    } catch (err) {
      warnings.push(`skipping ${label}: ${(err as Error).message}`);
      continue;
    }
    if (rows.length < 2) {
      warnings.push(`skipping ${label}: trace too short (${rows.length} rows)`);
      continue;
    }
    curves.push({ label, rows });
  }
  return curves;
}

function toSeries(
  curves: MethodCurve[],
  xOf: (row: TraceRow) => number,
  logY: boolean,
  warnings: string[]
): Series[] {
  const out: Series[] = [];
  for (const { label, rows } of curves) {
    let points = rows
      .filter((r) => Number.isFinite(r.metric_value))
      .map((r) => [xOf(r), r.metric_value] as [number, number]);
    if (logY) {
      const positive = points.filter(([, v]) => v > 0);
      if (positive.length < points.length) {
        warnings.push(`${label}: dropped ${points.length - positive.length} non-positive points on the log axis`);
      }
      points = positive;
    }
    if (points.length < 2) {
      warnings.push(`skipping ${label}: fewer than 2 plottable points`);
      continue;
    }
    out.push({ label, points });
  }
  return out;
}

/** Render the two benchmark panels (metric vs iteration, metric vs cumulative
 * JVP/operator count) from a bench manifest.  Returns the written file paths
 * and any per-curve warnings. */
export async function render(
  manifestPath: string,
  outDir: string,
  opts: { logY?: boolean } = {}
): Promise<RenderResult> {
  const logY = opts.logY ?? true;
  const manifest = await loadManifest(manifestPath);
  if (manifest.methods.length === 0) {
    throw new Error("manifest lists no methods; nothing to render");
  }
  const warnings: string[] = [];
  const curves = await collectCurves(manifestPath, manifest, warnings);
  if (curves.length === 0) {
    throw new Error(`no plottable curves (${warnings.join("; ")})`);
  }
  const metric = manifest.metric_name || "metric";

  const panels: Array<{ file: string; xLabel: string; xOf: (r: TraceRow) => number; title: string }> = [
    {
      file: "metric_vs_iterations.svg",
      xLabel: "iteration",
      xOf: (r) => r.iter,
      title: `${metric} per iteration`,
    },
    {
      file: "metric_vs_oracle.svg",
      xLabel: "JVP/operator computations",
      xOf: (r) => r.op_evals + r.jvp_evals,
      title: `${metric} per JVP/operator computation`,
    },
  ];

  await fs.mkdir(outDir, { recursive: true });
  const files: string[] = [];
  for (const panel of panels) {
    const series = toSeries(curves, panel.xOf, logY, warnings);
    if (series.length === 0) {
      throw new Error("no series survived filtering; cannot render");
    }
    const svg = renderPanel(series, {
      title: panel.title,
      xLabel: panel.xLabel,
      yLabel: metric,
      logY,
    });
    const target = path.join(outDir, panel.file);
    await fs.writeFile(target, svg + "\n", "utf8");
    files.push(target);
  }
  return { files, warnings };
}
