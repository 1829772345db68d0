import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { describe, expect, it } from 'vitest';

import { parseCsv } from '../src/csv';
import { FigureSpec, renderFigure, renderToFile } from '../src/figures';

const FIXTURES = path.join(__dirname, '..', 'fixtures');

function fixture(name: string): string {
  return path.join(FIXTURES, name);
}

function tmpFile(name: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'reportviz-'));
  return path.join(dir, name);
}

const SPECS: FigureSpec[] = [
  {
    kind: 'timeseries',
    inputs: [fixture('ledger_eps0.05.csv'), fixture('ledger_eps0.01.csv')],
    output: 'timeseries.svg',
  },
  { kind: 'ladder', inputs: [fixture('ledger_eps0.05.csv')], output: 'ladder.svg' },
  { kind: 'sweep', inputs: [fixture('sweep.csv')], output: 'sweep.svg' },
  { kind: 'order', inputs: [fixture('orders.csv')], output: 'order.svg' },
  { kind: 'constants', inputs: [fixture('cutoff_constants.csv')], output: 'constants.svg' },
];

describe('figure rendering', () => {
  for (const spec of SPECS) {
    it(`renders ${spec.kind}`, () => {
      const svg = renderFigure(spec);
      expect(svg.startsWith('<svg')).toBe(true);
      expect(svg).toContain('</svg>');
      expect(svg).toContain('polyline');
    });

    it(`${spec.kind} is byte-stable on re-render`, () => {
      expect(renderFigure(spec)).toBe(renderFigure(spec));
    });
  }

  it('writes the output file', () => {
    const out = tmpFile('figure.svg');
    renderToFile({ ...SPECS[0], output: out });
    const written = fs.readFileSync(out, 'utf8');
    expect(written).toBe(renderFigure(SPECS[0]));
  });

  it('re-render to file is byte-stable', () => {
    const out = tmpFile('figure.svg');
    renderToFile({ ...SPECS[3], output: out });
    const first = fs.readFileSync(out);
    renderToFile({ ...SPECS[3], output: out });
    expect(fs.readFileSync(out).equals(first)).toBe(true);
  });
});

describe('error handling', () => {
  it('rejects an empty ledger with "no rows"', () => {
    expect(() => parseCsv('', 'empty.csv')).toThrow(/no rows/);
    expect(() => parseCsv('time,u_max\n', 'header-only.csv')).toThrow(/no rows/);
  });

  it('names the missing column', () => {
    const bad = tmpFile('bad.csv');
    fs.writeFileSync(bad, 'time,v_max\n0.0,1.0\n');
    expect(() => renderFigure({ kind: 'timeseries', inputs: [bad], output: 'x.svg' }))
      .toThrow(/missing column u_max/);
  });

  it('rejects ledgers without rung columns for ladder figures', () => {
    const bad = tmpFile('bad.csv');
    fs.writeFileSync(bad, 'time,u_max,v_max,grad_v_max\n0.0,1.0,1.0,0.0\n');
    expect(() => renderFigure({ kind: 'ladder', inputs: [bad], output: 'x.svg' }))
      .toThrow(/missing column suprung/);
  });

  it('rejects unknown figure kinds', () => {
    expect(() => renderFigure({ kind: 'pie' as never, inputs: ['x'], output: 'x.svg' }))
      .toThrow(/unknown figure kind/);
  });

  it('rejects missing inputs', () => {
    expect(() => renderFigure({ kind: 'sweep', inputs: ['/nope.csv'], output: 'x.svg' }))
      .toThrow(/does not exist/);
  });
});
