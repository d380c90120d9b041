import { describe, expect, it } from 'vitest';

import { hashEncode, makeHashEncoder, tokenize } from '../src/hash-encoder.js';
import { resolveEncoder } from '../src/encoder.js';

describe('tokenize', () => {
  it('lowercases and splits on non-alphanumerics', () => {
    expect(tokenize('Hello, World! 42', 10)).toEqual(['hello', 'world', '42']);
  });

  it('truncates to maxTokens', () => {
    expect(tokenize('a b c d e', 3)).toEqual(['a', 'b', 'c']);
  });
});

describe('hashEncode', () => {
  it('is deterministic', () => {
    const a = hashEncode('the quick brown fox', 16, 128);
    const b = hashEncode('the quick brown fox', 16, 128);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it('is L2-normalized', () => {
    const v = hashEncode('some text to encode', 32, 128);
    const norm = Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
    expect(norm).toBeCloseTo(1.0, 12);
  });

  it('never yields a zero vector, even for symbol-only text', () => {
    const v = hashEncode('!!! ???', 8, 128);
    const norm = Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
    expect(norm).toBeGreaterThan(0);
  });

  it('separates different texts', () => {
    const a = hashEncode('basketball game tonight', 64, 128);
    const b = hashEncode('quarterly earnings report', 64, 128);
    const dot = a.reduce((acc, x, i) => acc + x * b[i], 0);
    expect(Math.abs(dot)).toBeLessThan(0.9);
  });
});

describe('resolveEncoder', () => {
  it('resolves hash:<dim> names', async () => {
    const encoder = await resolveEncoder('hash:24');
    expect(encoder.dim).toBe(24);
    const vectors = await encoder.encode(['one', 'two'], 128);
    expect(vectors).toHaveLength(2);
    expect(vectors[0]).toHaveLength(24);
  });

  it('rejects a zero dimension', () => {
    expect(() => makeHashEncoder(0)).toThrow(/positive/);
  });

  it('fails with a cause when the transformer package is unavailable', async () => {
    await expect(resolveEncoder('bert-base-uncased')).rejects.toThrow(
      /@huggingface\/transformers|failed to load/,
    );
  });
});
