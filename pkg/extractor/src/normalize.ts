/**
 * Text normalization, kept byte-identical with the classifier toolkit's rule
 * chain (cross-checked by the shared test vector file in ../tests/data/):
 * newlines to spaces, commas and decimal digits removed, every remaining
 * non-alphanumeric non-space character removed, spaces collapsed, trimmed,
 * lowercased.
 */

const DECIMAL_DIGIT = /\p{Nd}/u;
const ALNUM = /[\p{L}\p{N}]/u;

export function normalizeText(s: string): string {
  let t = s.replace(/\r/g, ' ').replace(/\n/g, ' ');
  t = t.replace(/,/g, '');
  let kept = '';
  for (const ch of t) {
    if (DECIMAL_DIGIT.test(ch)) continue;
    if (ALNUM.test(ch) || ch === ' ') kept += ch;
  }
  return kept
    .split(' ')
    .filter((part) => part.length > 0)
    .join(' ')
    .toLowerCase();
}
