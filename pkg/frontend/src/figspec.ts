import { existsSync, readFileSync } from 'fs';

export const FIGURE_KINDS = ['cost_vs_eps', 'replans_vs_eps', 'time_trace', 'paths'] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

export function parseSpec(data: unknown, baseDir = '.'): FigureSpec {
  if (typeof data !== 'object' || data === null || Array.isArray(data)) {
    throw new Error('figure spec must be a JSON object');
  }
  const obj = data as Record<string, unknown>;
  const allowed = new Set(['kind', 'inputs', 'output', 'title', 'x_label', 'y_label']);
  for (const key of Object.keys(obj)) {
    if (!allowed.has(key)) {
      throw new Error(`unknown figure spec key "${key}"`);
    }
  }
  const kind = obj.kind;
  if (typeof kind !== 'string' || !(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new Error(`kind must be one of ${FIGURE_KINDS.join(', ')}`);
  }
  const inputs = obj.inputs;
  if (!Array.isArray(inputs) || inputs.length === 0 || !inputs.every((p) => typeof p === 'string')) {
    throw new Error('inputs must be a nonempty list of file paths');
  }
  const resolved = inputs.map((p) => resolve(baseDir, p));
  for (const path of resolved) {
    if (!existsSync(path)) {
      throw new Error(`input file not found: ${path}`);
    }
  }
  if (typeof obj.output !== 'string' || obj.output.length === 0) {
    throw new Error('output must be a file path');
  }
  return {
    kind: kind as FigureKind,
    inputs: resolved,
    output: resolve(baseDir, obj.output),
    title: optionalString(obj, 'title'),
    xLabel: optionalString(obj, 'x_label'),
    yLabel: optionalString(obj, 'y_label'),
  };
}

export function loadSpec(path: string): FigureSpec {
  const dir = path.includes('/') ? path.slice(0, path.lastIndexOf('/')) : '.';
  return parseSpec(JSON.parse(readFileSync(path, 'utf-8')), dir);
}

function optionalString(obj: Record<string, unknown>, key: string): string | undefined {
  const v = obj[key];
  if (v === undefined) return undefined;
  if (typeof v !== 'string') {
    throw new Error(`${key} must be a string`);
  }
  return v;
}

function resolve(baseDir: string, path: string): string {
  if (path.startsWith('/')) return path;
  return `${baseDir}/${path}`;
}
