#!/usr/bin/env node
/** plots CLI:
 *   plots render <manifest.json> --out <dir> [--linear]
 *   plots summarize <manifest.json>
 */

import { render } from "./render.js";
import { formatSummary, summarize } from "./summarize.js";
import { loadManifest } from "./data.js";

function usage(): never {
  console.error("usage: plots render <manifest> --out <dir> [--linear]");
  console.error("       plots summarize <manifest>");
  process.exit(2);
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  if (command === "render") {
    const positional = rest.filter((a) => !a.startsWith("--"));
    const manifestPath = positional[0];
    const outIdx = rest.indexOf("--out");
    if (!manifestPath || outIdx === -1 || !rest[outIdx + 1]) usage();
    const logY = !rest.includes("--linear");
    const { files, warnings } = await render(manifestPath, rest[outIdx + 1], { logY });
    for (const w of warnings) console.warn(`warning: ${w}`);
    for (const f of files) console.log(f);
    return 0;
  }
  if (command === "summarize") {
    const manifestPath = rest.filter((a) => !a.startsWith("--"))[0];
    if (!manifestPath) usage();
    const manifest = await loadManifest(manifestPath);
    const summary = await summarize(manifestPath);
    for (const w of summary.warnings) console.warn(`warning: ${w}`);
    console.log(formatSummary(summary, manifest.metric_name));
    return 0;
  }
  usage();
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(process.argv.slice(2))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`error: ${(err as Error).message}`);
      process.exit(1);
    });
}
