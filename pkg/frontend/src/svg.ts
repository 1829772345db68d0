// Deterministic SVG line charts: pure string building, fixed layout and
// number formatting, so identical inputs produce identical bytes.

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logY?: boolean;
  logX?: boolean;
}

export const PALETTE = [
  '#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e',
  '#8c564b', '#17becf', '#7f7f7f', '#bcbd22', '#e377c2',
];

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 78, right: 24, top: 48, bottom: 56 };

export function fmt(x: number): string {
  if (!isFinite(x)) return String(x);
  if (x === 0) return '0';
  const abs = Math.abs(x);
  if (abs >= 1e4 || abs < 1e-3) return x.toExponential(3);
  return String(Number(x.toPrecision(6)));
}

function fin(values: number[], log: boolean): number[] {
  return values.filter((v) => isFinite(v) && (!log || v > 0));
}

function bounds(series: Series[], pick: (s: Series) => number[], log: boolean): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const v of fin(pick(s), log)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!isFinite(lo) || !isFinite(hi)) throw new Error('no finite data to plot');
  if (lo === hi) {
    lo = log ? lo / 2 : lo - 1;
    hi = log ? hi * 2 : hi + 1;
  }
  return [lo, hi];
}

function ticks(lo: number, hi: number, log: boolean): number[] {
  if (log) {
    const out: number[] = [];
    const d0 = Math.ceil(Math.log10(lo) - 1e-9);
    const d1 = Math.floor(Math.log10(hi) + 1e-9);
    for (let d = d0; d <= d1; d++) out.push(Math.pow(10, d));
    if (out.length < 2) return [lo, hi];
    return out;
  }
  const out: number[] = [];
  for (let i = 0; i <= 5; i++) out.push(lo + ((hi - lo) * i) / 5);
  return out;
}

export function renderChart(spec: ChartSpec): string {
  const logY = Boolean(spec.logY);
  const logX = Boolean(spec.logX);
  const [x0, x1] = bounds(spec.series, (s) => s.xs, logX);
  const [y0, y1] = bounds(spec.series, (s) => s.ys, logY);
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

  const sx = (x: number): number => {
    const t = logX
      ? (Math.log(x) - Math.log(x0)) / (Math.log(x1) - Math.log(x0))
      : (x - x0) / (x1 - x0);
    return MARGIN.left + t * plotW;
  };
  const sy = (y: number): number => {
    const t = logY
      ? (Math.log(y) - Math.log(y0)) / (Math.log(y1) - Math.log(y0))
      : (y - y0) / (y1 - y0);
    return MARGIN.top + (1 - t) * plotH;
  };

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(`<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">${escapeXml(spec.title)}</text>`);
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#000000"/>`);

  for (const t of ticks(x0, x1, logX)) {
    const px = fmt2(sx(t));
    parts.push(`<line x1="${px}" y1="${MARGIN.top + plotH}" x2="${px}" y2="${MARGIN.top + plotH + 5}" stroke="#000000"/>`);
    parts.push(`<text x="${px}" y="${MARGIN.top + plotH + 20}" text-anchor="middle" font-family="sans-serif" font-size="11">${fmt(t)}</text>`);
  }
  for (const t of ticks(y0, y1, logY)) {
    const py = fmt2(sy(t));
    parts.push(`<line x1="${MARGIN.left - 5}" y1="${py}" x2="${MARGIN.left}" y2="${py}" stroke="#000000"/>`);
    parts.push(`<text x="${MARGIN.left - 9}" y="${py}" text-anchor="end" dominant-baseline="middle" font-family="sans-serif" font-size="11">${fmt(t)}</text>`);
  }
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-family="sans-serif" font-size="13">${escapeXml(spec.xLabel)}</text>`);
  parts.push(`<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${escapeXml(spec.yLabel)}</text>`);

  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts: string[] = [];
    for (let k = 0; k < s.xs.length; k++) {
      const x = s.xs[k];
      const y = s.ys[k];
      if (!isFinite(x) || !isFinite(y)) continue;
      if ((logX && x <= 0) || (logY && y <= 0)) continue;
      pts.push(`${fmt2(sx(x))},${fmt2(sy(y))}`);
    }
    if (pts.length === 0) return;
    parts.push(`<polyline points="${pts.join(' ')}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    for (const p of pts) {
      const [cx, cy] = p.split(',');
      parts.push(`<circle cx="${cx}" cy="${cy}" r="2.5" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 14 + 16 * i;
    parts.push(`<line x1="${MARGIN.left + plotW - 150}" y1="${ly - 4}" x2="${MARGIN.left + plotW - 130}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${MARGIN.left + plotW - 124}" y="${ly}" font-family="sans-serif" font-size="11">${escapeXml(s.label)}</text>`);
  });

  parts.push('</svg>');
  return parts.join('\n') + '\n';
}

function fmt2(x: number): string {
  return x.toFixed(2);
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
