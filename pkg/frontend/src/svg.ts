/**
 * Deterministic SVG assembly: no timestamps, no randomness, coordinates
 * rounded to fixed precision, so a figure is a pure function of its inputs.
 * Data-carrying elements embed their source values in data-* attributes,
 * which is what the tests compare against the CSVs.
 */

export const WIDTH = 680;
export const HEIGHT = 460;
export const MARGIN = { left: 72, right: 24, top: 44, bottom: 58 };

export const PALETTE = [
  '#1f77b4', '#2ca02c', '#d62728', '#ff7f0e',
  '#9467bd', '#8c564b', '#17becf', '#7f7f7f',
];

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 1;
    d1 += 1;
  }
  const k = (range[1] - range[0]) / (d1 - d0);
  const fn = ((v: number) => range[0] + (v - d0) * k) as Scale;
  fn.domain = [d0, d1];
  return fn;
}

/** Tick positions at a 1/2/5 step covering the domain. */
export function ticks(domain: [number, number], count = 6): number[] {
  const span = domain[1] - domain[0];
  if (span <= 0) return [domain[0]];
  const rawStep = span / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (mag * m >= rawStep) {
      step = mag * m;
      break;
    }
  }
  const out: number[] = [];
  let v = Math.ceil(domain[0] / step) * step;
  for (; v <= domain[1] + 1e-12; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function escapeText(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

const fmt = (v: number): string => v.toFixed(2);

export function polylinePath(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? 'M' : 'L'}${fmt(x)} ${fmt(y)}`)
    .join(' ');
}

export function bandPath(upper: Array<[number, number]>, lower: Array<[number, number]>): string {
  const fwd = upper.map(([x, y], i) => `${i === 0 ? 'M' : 'L'}${fmt(x)} ${fmt(y)}`);
  const back = [...lower].reverse().map(([x, y]) => `L${fmt(x)} ${fmt(y)}`);
  return [...fwd, ...back, 'Z'].join(' ');
}

export interface AxisLabels {
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

export function frame(
  x: Scale,
  y: Scale,
  labels: AxisLabels,
  body: string[],
  legend: Array<{ label: string; color: string }>,
): string {
  const plotLeft = MARGIN.left;
  const plotRight = WIDTH - MARGIN.right;
  const plotTop = MARGIN.top;
  const plotBottom = HEIGHT - MARGIN.bottom;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  for (const t of ticks(x.domain)) {
    const px = fmt(x(t));
    parts.push(
      `<line x1="${px}" y1="${fmt(plotTop)}" x2="${px}" y2="${fmt(plotBottom)}" stroke="#eeeeee"/>`,
      `<text x="${px}" y="${fmt(plotBottom + 18)}" text-anchor="middle" fill="#333333">${formatTick(t)}</text>`,
    );
  }
  for (const t of ticks(y.domain)) {
    const py = fmt(y(t));
    parts.push(
      `<line x1="${fmt(plotLeft)}" y1="${py}" x2="${fmt(plotRight)}" y2="${py}" stroke="#eeeeee"/>`,
      `<text x="${fmt(plotLeft - 8)}" y="${py}" text-anchor="end" dominant-baseline="middle" fill="#333333">${formatTick(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${plotLeft}" y="${plotTop}" width="${plotRight - plotLeft}" ` +
      `height="${plotBottom - plotTop}" fill="none" stroke="#333333"/>`,
  );
  if (labels.title) {
    parts.push(
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="15" fill="#111111">${escapeText(labels.title)}</text>`,
    );
  }
  if (labels.xLabel) {
    parts.push(
      `<text x="${(plotLeft + plotRight) / 2}" y="${HEIGHT - 14}" text-anchor="middle" fill="#111111">${escapeText(labels.xLabel)}</text>`,
    );
  }
  if (labels.yLabel) {
    const cy = (plotTop + plotBottom) / 2;
    parts.push(
      `<text x="18" y="${cy}" text-anchor="middle" fill="#111111" transform="rotate(-90 18 ${cy})">${escapeText(labels.yLabel)}</text>`,
    );
  }
  parts.push(...body);

  legend.forEach((entry, i) => {
    const ly = plotTop + 10 + 18 * i;
    const lx = plotLeft + 12;
    parts.push(
      `<rect x="${lx}" y="${ly - 8}" width="14" height="4" fill="${entry.color}"/>`,
      `<text x="${lx + 20}" y="${ly}" dominant-baseline="text-after-edge" fill="#111111">${escapeText(entry.label)}</text>`,
    );
  });
  parts.push('</svg>');
  return parts.join('\n') + '\n';
}

function formatTick(v: number): string {
  if (Math.abs(v) >= 1000 || (v !== 0 && Math.abs(v) < 0.01)) {
    return v.toExponential(1);
  }
  return Number(v.toPrecision(6)).toString();
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}

/** Pad a data domain so lines do not sit on the frame. */
export function padDomain(lo: number, hi: number, frac = 0.06): [number, number] {
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * frac;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}
