// Deterministic feature-hashing text encoder for offline use and fixtures.
// Unigrams and bigrams of the first maxTokens tokens are hashed into a
// fixed-dimension signed bag, then L2-normalized. No model download, no
// randomness: the same text always yields the same vector.

import type { Encoder } from './encoder.js';

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

function fnv1a(text: string): number {
  let hash = FNV_OFFSET;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, FNV_PRIME) >>> 0;
  }
  return hash >>> 0;
}

export function tokenize(text: string, maxTokens: number): string[] {
  const tokens = text
    .toLowerCase()
    .split(/[^\p{L}\p{N}]+/u)
    .filter((t) => t.length > 0);
  return tokens.slice(0, maxTokens);
}

export function hashEncode(
  text: string,
  dim: number,
  maxTokens: number,
): Float64Array {
  const vector = new Float64Array(dim);
  const tokens = tokenize(text, maxTokens);
  const features = ['__bias__', ...tokens];
  for (let i = 0; i + 1 < tokens.length; i++) {
    features.push(`${tokens[i]} ${tokens[i + 1]}`);
  }
  for (const feature of features) {
    const hash = fnv1a(feature);
    const bucket = hash % dim;
    const sign = (hash & 0x80000000) === 0 ? 1.0 : -1.0;
    vector[bucket] += sign;
  }
  let norm = 0.0;
  for (let i = 0; i < dim; i++) {
    norm += vector[i] * vector[i];
  }
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < dim; i++) {
      vector[i] /= norm;
    }
  }
  return vector;
}

export function makeHashEncoder(dim: number): Encoder {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`hash encoder dimension must be a positive integer, got ${dim}`);
  }
  return {
    name: `hash:${dim}`,
    dim,
    async encode(texts: string[], maxTokens: number): Promise<number[][]> {
      return texts.map((text) => Array.from(hashEncode(text, dim, maxTokens)));
    },
  };
}
