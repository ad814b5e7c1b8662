import { readFileSync } from 'fs';

import { num, readCsv, requireColumns, Row } from './csv';
import { FigureSpec } from './figspec';
import {
  bandPath, frame, linearScale, padDomain, PALETTE, plotArea, polylinePath,
} from './svg';

interface Series {
  label: string;
  points: Array<{ x: number; mean: number; std: number }>;
}

function summarySeries(paths: string[], valueCol: string, stdCol: string): Series[] {
  const byPolicy = new Map<string, Series>();
  for (const path of paths) {
    const rows = readCsv(path);
    requireColumns(rows, ['policy', 'eps', valueCol, stdCol], path);
    for (const row of rows) {
      const label = row.policy;
      let series = byPolicy.get(label);
      if (!series) {
        series = { label, points: [] };
        byPolicy.set(label, series);
      }
      series.points.push({ x: num(row, 'eps'), mean: num(row, valueCol), std: num(row, stdCol) });
    }
  }
  const out = [...byPolicy.values()];
  out.sort((a, b) => (a.label < b.label ? -1 : a.label > b.label ? 1 : 0));
  for (const s of out) {
    s.points.sort((a, b) => a.x - b.x);
  }
  return out;
}

function renderSeriesFigure(spec: FigureSpec, valueCol: string, stdCol: string,
                            defaultY: string): string {
  const series = summarySeries(spec.inputs, valueCol, stdCol);
  const area = plotArea();
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const lo = Math.min(...series.flatMap((s) => s.points.map((p) => p.mean - p.std)));
  const hi = Math.max(...series.flatMap((s) => s.points.map((p) => p.mean + p.std)));
  const x = linearScale(padDomain(Math.min(...xs), Math.max(...xs), 0.03), area.x);
  const y = linearScale(padDomain(lo, hi), area.y);

  const body: string[] = [];
  const legend: Array<{ label: string; color: string }> = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    legend.push({ label: s.label, color });
    const upper = s.points.map((p) => [x(p.x), y(p.mean + p.std)] as [number, number]);
    const lower = s.points.map((p) => [x(p.x), y(p.mean - p.std)] as [number, number]);
    const mid = s.points.map((p) => [x(p.x), y(p.mean)] as [number, number]);
    body.push(`<g class="series" data-label="${s.label}">`);
    body.push(`<path d="${bandPath(upper, lower)}" fill="${color}" fill-opacity="0.15" stroke="none"/>`);
    body.push(`<path d="${polylinePath(mid)}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    for (const p of s.points) {
      body.push(
        `<circle cx="${x(p.x).toFixed(2)}" cy="${y(p.mean).toFixed(2)}" r="3" fill="${color}" ` +
          `data-eps="${p.x}" data-mean="${p.mean}" data-std="${p.std}"/>`,
      );
    }
    body.push('</g>');
  });
  return frame(x, y, {
    title: spec.title,
    xLabel: spec.xLabel ?? 'noise scale',
    yLabel: spec.yLabel ?? defaultY,
  }, body, legend);
}

interface RolloutArtifact {
  policy: string;
  eps: number;
  states: number[][];
  step_plan_ms: number[];
  n_agents?: number;
  agent_nx?: number;
}

function readRollout(path: string): RolloutArtifact {
  const data = JSON.parse(readFileSync(path, 'utf-8')) as Record<string, unknown>;
  for (const key of ['policy', 'eps', 'states', 'step_plan_ms']) {
    if (!(key in data)) {
      throw new Error(`${path}: missing field "${key}"`);
    }
  }
  return data as unknown as RolloutArtifact;
}

function renderTimeTrace(spec: FigureSpec): string {
  const artifacts = spec.inputs.map(readRollout);
  const area = plotArea();
  const maxT = Math.max(...artifacts.map((a) => a.step_plan_ms.length));
  const maxY = Math.max(...artifacts.flatMap((a) => a.step_plan_ms));
  const x = linearScale(padDomain(0, maxT - 1, 0.02), area.x);
  const y = linearScale(padDomain(0, maxY), area.y);

  const body: string[] = [];
  const legend: Array<{ label: string; color: string }> = [];
  artifacts.forEach((art, i) => {
    const color = PALETTE[i % PALETTE.length];
    legend.push({ label: art.policy, color });
    const pts = art.step_plan_ms.map((v, t) => [x(t), y(v)] as [number, number]);
    body.push(`<g class="series" data-label="${art.policy}">`);
    body.push(`<path d="${polylinePath(pts)}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    art.step_plan_ms.forEach((v, t) => {
      body.push(
        `<circle cx="${x(t).toFixed(2)}" cy="${y(v).toFixed(2)}" r="2" fill="${color}" ` +
          `data-t="${t}" data-ms="${v}"/>`,
      );
    });
    body.push('</g>');
  });
  return frame(x, y, {
    title: spec.title,
    xLabel: spec.xLabel ?? 'time step',
    yLabel: spec.yLabel ?? 'planning time (ms)',
  }, body, legend);
}

function renderPaths(spec: FigureSpec): string {
  const artifacts = spec.inputs.map(readRollout);
  interface Track { label: string; xy: Array<[number, number]> }
  const tracks: Track[] = [];
  for (const art of artifacts) {
    const nAgents = art.n_agents ?? 1;
    const span = art.agent_nx ?? art.states[0].length;
    for (let a = 0; a < nAgents; a += 1) {
      const xy = art.states.map((s) => [s[a * span], s[a * span + 1]] as [number, number]);
      const suffix = nAgents > 1 ? ` agent ${a + 1}` : '';
      tracks.push({ label: `${art.policy} eps=${art.eps}${suffix}`, xy });
    }
  }
  const area = plotArea();
  const allX = tracks.flatMap((t) => t.xy.map((p) => p[0]));
  const allY = tracks.flatMap((t) => t.xy.map((p) => p[1]));
  const x = linearScale(padDomain(Math.min(...allX), Math.max(...allX)), area.x);
  const y = linearScale(padDomain(Math.min(...allY), Math.max(...allY)), area.y);

  const body: string[] = [];
  const legend: Array<{ label: string; color: string }> = [];
  tracks.forEach((t, i) => {
    const color = PALETTE[i % PALETTE.length];
    legend.push({ label: t.label, color });
    const pts = t.xy.map(([px, py]) => [x(px), y(py)] as [number, number]);
    body.push(`<g class="series" data-label="${t.label}">`);
    body.push(`<path d="${polylinePath(pts)}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    const [sx, sy] = t.xy[0];
    const [gx, gy] = t.xy[t.xy.length - 1];
    body.push(`<circle cx="${x(sx).toFixed(2)}" cy="${y(sy).toFixed(2)}" r="4" fill="${color}"/>`);
    body.push(
      `<rect x="${(x(gx) - 3.5).toFixed(2)}" y="${(y(gy) - 3.5).toFixed(2)}" width="7" height="7" fill="${color}"/>`,
    );
    body.push('</g>');
  });
  return frame(x, y, {
    title: spec.title,
    xLabel: spec.xLabel ?? 'x (m)',
    yLabel: spec.yLabel ?? 'y (m)',
  }, body, legend);
}

/** Render a figure to an SVG string (pure function of the input files). */
export function renderFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case 'cost_vs_eps':
      return renderSeriesFigure(spec, 'ratio_mean', 'ratio_std', 'cost ratio');
    case 'replans_vs_eps':
      return renderSeriesFigure(spec, 'replans_mean', 'replans_std', 'replans');
    case 'time_trace':
      return renderTimeTrace(spec);
    case 'paths':
      return renderPaths(spec);
  }
}
