import * as fs from 'node:fs';
import * as path from 'node:path';

import { describe, expect, it } from 'vitest';

import { normalizeText } from '../src/normalize';

const CASES: [string, string][] = JSON.parse(
  fs.readFileSync(
    path.join(__dirname, '..', '..', 'tests', 'data', 'normalize_cases.json'),
    'utf-8',
  ),
);

describe('normalizeText', () => {
  it.each(CASES)('normalizes %j', (raw, expected) => {
    expect(normalizeText(raw)).toBe(expected);
  });

  it('is idempotent on every shared vector', () => {
    for (const [raw] of CASES) {
      const once = normalizeText(raw);
      expect(normalizeText(once)).toBe(once);
    }
  });
});
