/**
 * Deterministic feature encoders.
 *
 * No pretrained checkpoint can be assumed available offline, so the default
 * model is a signed feature-hashing projection ("hash-v1"): stable across
 * runs and platforms given the same model string, which is exactly what the
 * downstream trainers need.  A named pretrained encoder can be plugged in
 * behind the same --model flag later; unknown names fail loudly.
 */
import { normalizeText } from './normalize';

export const SUPPORTED_MODELS = ['hash-v1'];
export const DEFAULT_TEXT_DIM = 384;   // common sentence-encoder width
export const DEFAULT_IMAGE_DIM = 512;  // common contrastive image-encoder width

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

function fnv1a(data: string | Uint8Array, seed: number): number {
  let h = (FNV_OFFSET ^ seed) >>> 0;
  if (typeof data === 'string') {
    for (let i = 0; i < data.length; i++) {
      h = (h ^ data.charCodeAt(i)) >>> 0;
      h = Math.imul(h, FNV_PRIME) >>> 0;
    }
  } else {
    for (const byte of data) {
      h = (h ^ byte) >>> 0;
      h = Math.imul(h, FNV_PRIME) >>> 0;
    }
  }
  return h >>> 0;
}

function modelSeed(model: string, modality: string): number {
  if (!SUPPORTED_MODELS.includes(model)) {
    throw new Error(
      `model ${model} is not available; supported models: ${SUPPORTED_MODELS.join(', ')}`,
    );
  }
  return fnv1a(`${model}:${modality}`, 0);
}

function addHashed(acc: Float64Array, hash: number): void {
  const bucket = hash % acc.length;
  const sign = (hash >>> 16) & 1 ? 1.0 : -1.0;
  acc[bucket] += sign;
}

function l2Normalized(acc: Float64Array): Float32Array {
  let norm = 0;
  for (const v of acc) norm += v * v;
  norm = Math.sqrt(norm);
  const out = new Float32Array(acc.length);
  if (norm > 0) {
    for (let i = 0; i < acc.length; i++) out[i] = acc[i] / norm;
  }
  return out;
}

/** Word unigrams plus character trigrams of the normalized text, hashed. */
export function encodeText(text: string, dim: number, model: string): Float32Array {
  const seed = modelSeed(model, 'text');
  const acc = new Float64Array(dim);
  const normalized = normalizeText(text);
  if (normalized.length > 0) {
    for (const word of normalized.split(' ')) {
      addHashed(acc, fnv1a(`w:${word}`, seed));
      const padded = `^${word}$`;
      for (let i = 0; i + 3 <= padded.length; i++) {
        addHashed(acc, fnv1a(`c:${padded.slice(i, i + 3)}`, seed));
      }
    }
  }
  return l2Normalized(acc);
}

/** Byte trigrams of the raw image file, hashed. */
export function encodeImageBytes(data: Uint8Array, dim: number, model: string): Float32Array {
  const seed = modelSeed(model, 'image');
  const acc = new Float64Array(dim);
  for (let i = 0; i + 3 <= data.length; i++) {
    let h = (FNV_OFFSET ^ seed) >>> 0;
    for (let j = i; j < i + 3; j++) {
      h = (h ^ data[j]) >>> 0;
      h = Math.imul(h, FNV_PRIME) >>> 0;
    }
    addHashed(acc, h >>> 0);
  }
  return l2Normalized(acc);
}
