import { promises as fs } from "fs";
import path from "path";
import Papa from "papaparse";

import { Manifest, TraceRow, TRACE_COLUMNS } from "./types.js";

export async function loadManifest(manifestPath: string): Promise<Manifest> {
  const raw = await fs.readFile(manifestPath, "utf8");
  const manifest = JSON.parse(raw) as Manifest;
  if (!Array.isArray(manifest.methods)) {
    throw new Error(`manifest has no methods array: ${manifestPath}`);
  }
  return manifest;
}

export function parseTraceCsv(content: string): TraceRow[] {
  const parsed = Papa.parse<Record<string, string>>(content.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of TRACE_COLUMNS) {
    if (!fields.includes(col)) {
      throw new Error(`trace CSV is missing column '${col}'`);
    }
  }
  return parsed.data.map((row) => ({
    iter: Number(row.iter),
    wall_s: Number(row.wall_s),
    op_evals: Number(row.op_evals),
    jvp_evals: Number(row.jvp_evals),
    lambda: Number(row.lambda),
    step_norm: Number(row.step_norm),
    metric_name: row.metric_name,
    metric_value: Number(row.metric_value),
  }));
}

/** Load one method's trace relative to the manifest location. */
export async function loadTrace(manifestPath: string, csvName: string): Promise<TraceRow[]> {
  const csvPath = path.join(path.dirname(manifestPath), csvName);
  const content = await fs.readFile(csvPath, "utf8");
  return parseTraceCsv(content);
}
