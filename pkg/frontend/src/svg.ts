/** Minimal SVG line-chart builder (no DOM): log- or linear-scaled y axis,
 * one polyline per series, legend from series labels. */

export interface Series {
  label: string;
  points: Array<[number, number]>;
}

export interface PanelOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
  width?: number;
  height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
const MARGIN = { top: 40, right: 150, bottom: 48, left: 72 };

function niceStep(span: number, target: number): number {
  const raw = span / Math.max(target, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1;
  return step * mag;
}

function linearTicks(min: number, max: number, target = 6): number[] {
  if (max <= min) return [min];
  const step = niceStep(max - min, target);
  const ticks: number[] = [];
  for (let t = Math.ceil(min / step) * step; t <= max + 1e-12 * step; t += step) {
    ticks.push(t);
  }
  return ticks;
}

function decadeTicks(min: number, max: number): number[] {
  const lo = Math.floor(Math.log10(min));
  const hi = Math.ceil(Math.log10(max));
  const every = Math.max(1, Math.ceil((hi - lo) / 8));
  const ticks: number[] = [];
  for (let e = lo; e <= hi; e += every) ticks.push(Math.pow(10, e));
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return Number(v.toPrecision(4)).toString();
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderPanel(series: Series[], opts: PanelOptions): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) {
    throw new Error("nothing to plot: every series is empty");
  }
  const xMin = Math.min(...pts.map((p) => p[0]));
  const xMax = Math.max(...pts.map((p) => p[0]));
  const yMin = Math.min(...pts.map((p) => p[1]));
  const yMax = Math.max(...pts.map((p) => p[1]));

  const x = (v: number) =>
    MARGIN.left + (xMax > xMin ? ((v - xMin) / (xMax - xMin)) * plotW : plotW / 2);
  const y = opts.logY
    ? (v: number) =>
        MARGIN.top +
        plotH -
        ((Math.log10(v) - Math.log10(yMin)) / Math.max(Math.log10(yMax) - Math.log10(yMin), 1e-12)) * plotH
    : (v: number) =>
        MARGIN.top + plotH - (yMax > yMin ? ((v - yMin) / (yMax - yMin)) * plotH : plotH / 2);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12" ` +
      `data-y-scale="${opts.logY ? "log" : "linear"}">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">${esc(opts.title)}</text>`
  );

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="black"/>`);
  for (const t of linearTicks(xMin, xMax)) {
    const px = x(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(`<text x="${px}" y="${y0 + 18}" text-anchor="middle">${fmt(t)}</text>`);
  }
  const yTicks = opts.logY ? decadeTicks(yMin, yMax) : linearTicks(yMin, yMax);
  for (const t of yTicks) {
    const py = y(t);
    if (py < MARGIN.top - 1 || py > y0 + 1) continue;
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(
      `<line x1="${x0}" y1="${py}" x2="${x0 + plotW}" y2="${py}" stroke="#dddddd" stroke-dasharray="3,3"/>`
    );
    parts.push(`<text x="${x0 - 8}" y="${py + 4}" text-anchor="end">${fmt(t)}</text>`);
  }
  parts.push(
    `<text x="${x0 + plotW / 2}" y="${height - 8}" text-anchor="middle">${esc(opts.xLabel)}</text>`
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${esc(opts.yLabel)}</text>`
  );

  // curves and legend
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = s.points.map(([px, py]) => `${x(px).toFixed(2)},${y(py).toFixed(2)}`).join(" ");
    parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.5" data-label="${esc(s.label)}" points="${coords}"/>`
    );
    const ly = MARGIN.top + 16 * i;
    const lx = MARGIN.left + plotW + 12;
    parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 18}" y2="${ly}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${lx + 24}" y="${ly + 4}">${esc(s.label)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}
