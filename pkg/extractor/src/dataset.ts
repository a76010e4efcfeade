/** Dataset JSONL and taxonomy JSON readers (input side of extraction jobs). */
import * as fs from 'node:fs';

export interface DatasetRow {
  id: string;
  text: string;
  imageRef?: string;
}

export function readDataset(path: string): DatasetRow[] {
  const rows: DatasetRow[] = [];
  const seen = new Set<string>();
  const lines = fs.readFileSync(path, 'utf-8').split('\n');
  for (const [i, line] of lines.entries()) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    let doc: Record<string, unknown>;
    try {
      doc = JSON.parse(trimmed);
    } catch (err) {
      throw new Error(`${path}:${i + 1}: invalid JSON: ${err}`);
    }
    const id = String(doc.id);
    if (seen.has(id)) throw new Error(`${path}:${i + 1}: duplicate id ${id}`);
    seen.add(id);
    rows.push({
      id,
      text: typeof doc.text === 'string' ? doc.text : '',
      imageRef: typeof doc.image_ref === 'string' ? doc.image_ref : undefined,
    });
  }
  return rows;
}

export interface TaxonomyDoc {
  root: string;
  nodes: string[];
  edges: [string, string][];
  definitions: Record<string, string>;
  leafIndex: Record<string, number>;
}

/**
 * Parse a taxonomy file and return it with leaf indices resolved the same
 * way the classifier toolkit resolves them: explicit entries first, the
 * remaining leaves numbered in document order.
 */
export function readTaxonomy(path: string): TaxonomyDoc {
  const doc = JSON.parse(fs.readFileSync(path, 'utf-8'));
  const nfc = (s: string) => s.normalize('NFC');
  const nodes: string[] = doc.nodes.map(nfc);
  const edges: [string, string][] = (doc.edges ?? []).map(
    (e: string[]) => [nfc(e[0]), nfc(e[1])] as [string, string],
  );
  const hasChildren = new Set(edges.map(([parent]) => parent));
  const leaves = nodes.filter((n) => !hasChildren.has(n));

  const leafIndex: Record<string, number> = {};
  for (const [label, idx] of Object.entries(doc.leaf_index ?? {})) {
    leafIndex[nfc(label)] = idx as number;
  }
  const used = new Set(Object.values(leafIndex));
  const free = [...Array(leaves.length).keys()].filter((i) => !used.has(i));
  for (const leaf of leaves) {
    if (!(leaf in leafIndex)) leafIndex[leaf] = free.shift()!;
  }

  const definitions: Record<string, string> = {};
  for (const [label, text] of Object.entries(doc.definitions ?? {})) {
    definitions[nfc(label)] = text as string;
  }
  return { root: nfc(doc.root), nodes, edges, definitions, leafIndex };
}

/** Leaf labels ordered by leaf index. */
export function orderedLeaves(tax: TaxonomyDoc): string[] {
  return Object.keys(tax.leafIndex).sort((a, b) => tax.leafIndex[a] - tax.leafIndex[b]);
}
