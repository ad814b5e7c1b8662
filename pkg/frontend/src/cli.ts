#!/usr/bin/env node
import { mkdirSync, writeFileSync } from 'fs';
import { dirname } from 'path';

import { loadSpec } from './figspec';
import { renderFigure } from './render';

function main(argv: string[]): number {
  const args = argv.slice(2);
  let specPath: string | undefined;
  for (let i = 0; i < args.length; i += 1) {
    if (args[i] === '--spec') {
      specPath = args[i + 1];
      i += 1;
    } else if (args[i] === '--help' || args[i] === '-h') {
      console.log('usage: plot --spec FILE\n\nRenders one figure described by a JSON spec\n' +
        '{kind, inputs, output, title?, x_label?, y_label?} to SVG.');
      return 0;
    } else {
      console.error(`unknown argument: ${args[i]}`);
      return 2;
    }
  }
  if (!specPath) {
    console.error('usage: plot --spec FILE');
    return 2;
  }
  try {
    const spec = loadSpec(specPath);
    const svg = renderFigure(spec);
    mkdirSync(dirname(spec.output), { recursive: true });
    writeFileSync(spec.output, svg);
    console.log(`wrote ${spec.output}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

process.exitCode = main(process.argv);
