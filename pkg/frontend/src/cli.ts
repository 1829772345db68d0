#!/usr/bin/env node
// reportviz <spec.json>: render one figure per spec file.

import * as fs from 'fs';

import { FigureSpec, renderToFile } from './figures';

export function main(argv: string[]): number {
  if (argv.length !== 1) {
    process.stderr.write('usage: reportviz <spec.json>\n');
    return 2;
  }
  let spec: FigureSpec;
  try {
    spec = JSON.parse(fs.readFileSync(argv[0], 'utf8')) as FigureSpec;
  } catch (err) {
    process.stderr.write(`cannot read spec: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const out = renderToFile(spec);
    process.stdout.write(`${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`render failed: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
