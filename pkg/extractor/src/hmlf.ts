/**
 * HMLF feature-file format, bit-exact with the classifier toolkit's reader:
 *
 *   magic "HMLF" | u16 version=1 | u32 dim | u64 count   (all little-endian)
 *   count x (u16 id byte-length | UTF-8 id bytes)
 *   count x dim little-endian f32 values, row-major
 */
import * as fs from 'node:fs';

export const HMLF_MAGIC = 'HMLF';
export const HMLF_VERSION = 1;

export interface FeatureFile {
  dim: number;
  ids: string[];
  rows: Float32Array[];
}

export function encodeHmlf(ff: FeatureFile): Buffer {
  const idBufs = ff.ids.map((id) => Buffer.from(id, 'utf-8'));
  for (const [i, buf] of idBufs.entries()) {
    if (buf.length > 0xffff) throw new Error(`id too long: ${ff.ids[i]}`);
  }
  const idTableBytes = idBufs.reduce((acc, b) => acc + 2 + b.length, 0);
  const total = 4 + 2 + 4 + 8 + idTableBytes + 4 * ff.dim * ff.ids.length;
  const buf = Buffer.alloc(total);
  let off = buf.write(HMLF_MAGIC, 0, 'ascii');
  off = buf.writeUInt16LE(HMLF_VERSION, off);
  off = buf.writeUInt32LE(ff.dim, off);
  off = buf.writeBigUInt64LE(BigInt(ff.ids.length), off);
  for (const idBuf of idBufs) {
    off = buf.writeUInt16LE(idBuf.length, off);
    off += idBuf.copy(buf, off);
  }
  for (const row of ff.rows) {
    if (row.length !== ff.dim) throw new Error('row length does not match dim');
    for (const v of row) {
      if (!Number.isFinite(v)) throw new Error('non-finite feature value');
      off = buf.writeFloatLE(v, off);
    }
  }
  return buf;
}

export function writeHmlf(path: string, ff: FeatureFile): void {
  fs.writeFileSync(path, encodeHmlf(ff));
}

export function readHmlf(path: string): FeatureFile {
  const buf = fs.readFileSync(path);
  if (buf.subarray(0, 4).toString('ascii') !== HMLF_MAGIC) {
    throw new Error(`${path}: not an HMLF file`);
  }
  const version = buf.readUInt16LE(4);
  if (version !== HMLF_VERSION) throw new Error(`${path}: unsupported version ${version}`);
  const dim = buf.readUInt32LE(6);
  const count = Number(buf.readBigUInt64LE(10));
  let off = 18;
  const ids: string[] = [];
  for (let i = 0; i < count; i++) {
    const len = buf.readUInt16LE(off);
    off += 2;
    ids.push(buf.subarray(off, off + len).toString('utf-8'));
    off += len;
  }
  const rows: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      row[j] = buf.readFloatLE(off);
      off += 4;
    }
    rows.push(row);
  }
  if (off !== buf.length) throw new Error(`${path}: trailing bytes`);
  return { dim, ids, rows };
}
