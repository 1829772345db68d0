// The five figure kinds rendered from the simulator's CSV outputs.
//
// Inputs are consumed strictly through the published schemas: run
// ledgers (ledger.csv), sweep tables (sweep.csv), refinement orders
// (orders.csv) and weight constants (cutoff_constants.csv).

import * as fs from 'fs';
import * as path from 'path';

import { numberColumn, readCsv, stringColumn, Table } from './csv';
import { renderChart, Series } from './svg';

export type FigureKind = 'timeseries' | 'ladder' | 'sweep' | 'order' | 'constants';

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
}

function baseName(p: string): string {
  return path.basename(p).replace(/\.csv$/, '');
}

function timeseries(spec: FigureSpec): string {
  const series: Series[] = [];
  for (const input of spec.inputs) {
    const table = readCsv(input);
    const t = numberColumn(table, 'time');
    series.push({ label: `${baseName(input)} sup|u|`, xs: t, ys: numberColumn(table, 'u_max') });
    series.push({ label: `${baseName(input)} sup|grad v|`, xs: t, ys: numberColumn(table, 'grad_v_max') });
  }
  return renderChart({
    title: spec.title ?? 'Monitored sup norms',
    xLabel: 'time t',
    yLabel: 'sup norm',
    series,
  });
}

interface Rung {
  r: number;
  kappa: string;
  column: string;
}

function ladderRungs(table: Table): Rung[] {
  const rungs: Rung[] = [];
  for (const name of table.columns) {
    const match = /^suprung_r([0-9.eE+-]+)_k([0-9.eE+-]+)$/.exec(name);
    if (match) rungs.push({ r: Number(match[1]), kappa: match[2], column: name });
  }
  if (rungs.length === 0) {
    throw new Error(`missing column suprung_r*_k* in ${table.path}`);
  }
  return rungs;
}

function ladder(spec: FigureSpec): string {
  const table = readCsv(spec.inputs[0]);
  const rungs = ladderRungs(table);
  const kappas = Array.from(new Set(rungs.map((r) => r.kappa))).sort();
  const series: Series[] = kappas.map((kappa) => {
    const mine = rungs.filter((r) => r.kappa === kappa).sort((a, b) => a.r - b.r);
    return {
      label: `kappa=${kappa}`,
      xs: mine.map((r) => r.r),
      ys: mine.map((r) => {
        const col = numberColumn(table, r.column);
        return col[col.length - 1];
      }),
    };
  });
  return renderChart({
    title: spec.title ?? 'Exponent ladder at final time',
    xLabel: 'rung exponent r',
    yLabel: 'ladder value (sup-mass/weight-mass)^(1/r)',
    series,
    logX: true,
  });
}

function sweep(spec: FigureSpec): string {
  const table = readCsv(spec.inputs[0]);
  const eps = numberColumn(table, 'eps_low');
  const dist = numberColumn(table, 'distance');
  return renderChart({
    title: spec.title ?? 'Regularization sweep: successive distances',
    xLabel: 'regularization eps (lower member)',
    yLabel: 'sup-over-balls local L2 distance',
    series: [{ label: 'successive distance', xs: eps, ys: dist }],
    logX: true,
    logY: true,
  });
}

function order(spec: FigureSpec): string {
  const table = readCsv(spec.inputs[0]);
  const oracle = stringColumn(table, 'oracle');
  const level = numberColumn(table, 'level');
  const error = numberColumn(table, 'error');
  const names = Array.from(new Set(oracle));
  const series: Series[] = names.map((name) => {
    const xs: number[] = [];
    const ys: number[] = [];
    for (let i = 0; i < oracle.length; i++) {
      if (oracle[i] === name) {
        xs.push(level[i]);
        ys.push(error[i]);
      }
    }
    return { label: name, xs, ys };
  });
  return renderChart({
    title: spec.title ?? 'Refinement study: oracle errors per level',
    xLabel: 'refinement level',
    yLabel: 'error vs closed form',
    series,
    logY: true,
  });
}

function constants(spec: FigureSpec): string {
  const table = readCsv(spec.inputs[0]);
  const dim = numberColumn(table, 'dim');
  const kappa = numberColumn(table, 'kappa');
  const quantities = ['scaled_mass', 'comparability'] as const;
  const series: Series[] = [];
  for (const d of Array.from(new Set(dim)).sort()) {
    for (const q of quantities) {
      const vals = numberColumn(table, q);
      const xs: number[] = [];
      const ys: number[] = [];
      for (let i = 0; i < dim.length; i++) {
        if (dim[i] === d) {
          xs.push(kappa[i]);
          ys.push(vals[i]);
        }
      }
      const pairs = xs.map((x, i) => [x, ys[i]] as [number, number])
        .sort((a, b) => a[0] - b[0]);
      series.push({
        label: `dim=${d} ${q}`,
        xs: pairs.map((p) => p[0]),
        ys: pairs.map((p) => p[1]),
      });
    }
  }
  return renderChart({
    title: spec.title ?? 'Localization-weight constants across kappa',
    xLabel: 'decay parameter kappa',
    yLabel: 'measured constant',
    series,
    logX: true,
    logY: true,
  });
}

const RENDERERS: Record<FigureKind, (spec: FigureSpec) => string> = {
  timeseries,
  ladder,
  sweep,
  order,
  constants,
};

export function renderFigure(spec: FigureSpec): string {
  if (!spec.kind || !(spec.kind in RENDERERS)) {
    throw new Error(`unknown figure kind: ${String(spec.kind)}`);
  }
  if (!spec.inputs || spec.inputs.length === 0) {
    throw new Error('figure spec needs at least one input CSV');
  }
  for (const input of spec.inputs) {
    if (!fs.existsSync(input)) throw new Error(`input does not exist: ${input}`);
  }
  return RENDERERS[spec.kind](spec);
}

export function renderToFile(spec: FigureSpec): string {
  const svg = renderFigure(spec);
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, svg);
  return spec.output;
}
