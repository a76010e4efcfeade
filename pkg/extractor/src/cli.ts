/**
 * Extraction CLI: encode meme text, class definitions or meme images into
 * the HMLF feature-file format consumed by the classifier toolkit.
 *
 *   extract --modality text        --data memes.jsonl        --out text.hmlf
 *   extract --modality definitions --taxonomy taxonomy.json  --out defs.hmlf
 *   extract --modality image       --data memes.jsonl --images-dir dir --out img.hmlf
 *
 * Flags mirror the toolkit's naming; --model selects the encoder (default
 * hash-v1, deterministic) and --dim its output width.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import { orderedLeaves, readDataset, readTaxonomy } from './dataset';
import {
  DEFAULT_IMAGE_DIM,
  DEFAULT_TEXT_DIM,
  encodeImageBytes,
  encodeText,
} from './encoders';
import { FeatureFile, writeHmlf } from './hmlf';

interface Args {
  modality: 'text' | 'image' | 'definitions';
  data?: string;
  taxonomy?: string;
  imagesDir?: string;
  model: string;
  dim?: number;
  out: string;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== 'extract') {
    throw new Error(`unknown command ${argv[0] ?? '(none)'}; expected "extract"`);
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`malformed flag ${key}`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  const modality = flags.get('modality');
  if (modality !== 'text' && modality !== 'image' && modality !== 'definitions') {
    throw new Error('--modality must be text, image or definitions');
  }
  const out = flags.get('out');
  if (!out) throw new Error('--out is required');
  return {
    modality,
    data: flags.get('data'),
    taxonomy: flags.get('taxonomy'),
    imagesDir: flags.get('images-dir'),
    model: flags.get('model') ?? 'hash-v1',
    dim: flags.has('dim') ? Number(flags.get('dim')) : undefined,
    out,
  };
}

function extractTextJob(args: Args): FeatureFile {
  if (!args.data) throw new Error('--data is required for text extraction');
  const dim = args.dim ?? DEFAULT_TEXT_DIM;
  const rows = readDataset(args.data);
  return {
    dim,
    ids: rows.map((r) => r.id),
    rows: rows.map((r) => encodeText(r.text, dim, args.model)),
  };
}

function extractDefinitionsJob(args: Args): FeatureFile {
  if (!args.taxonomy) throw new Error('--taxonomy is required for definitions extraction');
  const dim = args.dim ?? DEFAULT_TEXT_DIM;
  const tax = readTaxonomy(args.taxonomy);
  const leaves = orderedLeaves(tax);
  const missing = leaves.filter((leaf) => !tax.definitions[leaf]);
  if (missing.length > 0) {
    throw new Error(`leaves without definition text: ${missing.join('; ')}`);
  }
  return {
    dim,
    ids: leaves,
    rows: leaves.map((leaf) => encodeText(tax.definitions[leaf], dim, args.model)),
  };
}

function extractImageJob(args: Args): { ff: FeatureFile; missing: string[] } {
  if (!args.data) throw new Error('--data is required for image extraction');
  const dim = args.dim ?? DEFAULT_IMAGE_DIM;
  const baseDir = args.imagesDir ?? path.dirname(args.data);
  const ids: string[] = [];
  const rows: Float32Array[] = [];
  const missing: string[] = [];
  for (const row of readDataset(args.data)) {
    const ref = row.imageRef;
    const resolved = ref ? path.resolve(baseDir, ref) : undefined;
    if (!resolved || !fs.existsSync(resolved)) {
      missing.push(`${row.id}: ${ref ?? '(no image_ref)'}`);
      continue;
    }
    ids.push(row.id);
    rows.push(encodeImageBytes(fs.readFileSync(resolved), dim, args.model));
  }
  return { ff: { dim, ids, rows }, missing };
}

export function run(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  try {
    if (args.modality === 'image') {
      const { ff, missing } = extractImageJob(args);
      writeHmlf(args.out, ff);
      console.error(`wrote ${ff.ids.length} rows (dim ${ff.dim}) to ${args.out}`);
      if (missing.length > 0) {
        console.error(`skipped ${missing.length} samples with missing images:`);
        for (const entry of missing) console.error(`  ${entry}`);
        return 2;
      }
      return 0;
    }
    const ff = args.modality === 'text' ? extractTextJob(args) : extractDefinitionsJob(args);
    writeHmlf(args.out, ff);
    console.error(`wrote ${ff.ids.length} rows (dim ${ff.dim}) to ${args.out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
