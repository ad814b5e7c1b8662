import assert from 'node:assert/strict';
import { test } from 'node:test';
import { join } from 'node:path';

import { num, parseCsv, readCsv, requireColumns } from '../src/csv';

const FIXTURES = join(__dirname, '..', '..', 'test', 'fixtures');

test('parses header and rows', () => {
  const rows = parseCsv('a,b\n1,2\n3,4\n');
  assert.equal(rows.length, 2);
  assert.deepEqual(rows[0], { a: '1', b: '2' });
  assert.deepEqual(rows[1], { a: '3', b: '4' });
});

test('ignores trailing blank lines', () => {
  assert.equal(parseCsv('a\n1\n\n\n').length, 1);
});

test('reads the sweep summary fixture', () => {
  const rows = readCsv(join(FIXTURES, 'summary.csv'));
  requireColumns(rows, ['policy', 'eps', 'ratio_mean', 'ratio_std'], 'summary.csv');
  assert.ok(rows.length >= 9);
  assert.ok(new Set(rows.map((r) => r.policy)).size === 3);
});

test('missing column names the column and file', () => {
  const rows = parseCsv('policy,eps\nmpc,0.1\n');
  assert.throws(
    () => requireColumns(rows, ['policy', 'ratio_mean'], 'weird.csv'),
    /weird\.csv: missing column "ratio_mean"/,
  );
});

test('non-numeric cells are rejected', () => {
  const rows = parseCsv('v\nnot-a-number\n');
  assert.throws(() => num(rows[0], 'v'), /non-numeric/);
});
