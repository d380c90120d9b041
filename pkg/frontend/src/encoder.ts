// Encoder resolution. "hash:<dim>" names the bundled deterministic
// encoder; any other name is treated as a pretrained transformer model id
// and loaded through @huggingface/transformers (requires the package and a
// local or cached model).

import { makeHashEncoder } from './hash-encoder.js';

export interface Encoder {
  name: string;
  dim: number;
  encode(texts: string[], maxTokens: number): Promise<number[][]>;
}

export class EncoderLoadError extends Error {}

const TRANSFORMERS_MODULE = '@huggingface/transformers';

async function loadTransformerEncoder(modelName: string): Promise<Encoder> {
  let transformers: any;
  try {
    transformers = await import(TRANSFORMERS_MODULE);
  } catch (err) {
    throw new EncoderLoadError(
      `encoder ${JSON.stringify(modelName)} needs the optional ` +
        `${TRANSFORMERS_MODULE} package (or use the offline "hash:<dim>" ` +
        `encoder): ${(err as Error).message}`,
    );
  }
  let extractor: any;
  let dim: number;
  try {
    extractor = await transformers.pipeline('feature-extraction', modelName);
    const probe = await extractor(['dimension probe'], { pooling: 'cls' });
    dim = probe.dims[probe.dims.length - 1];
  } catch (err) {
    throw new EncoderLoadError(
      `failed to load encoder ${JSON.stringify(modelName)}: ${(err as Error).message}`,
    );
  }
  return {
    name: modelName,
    dim,
    async encode(texts: string[], maxTokens: number): Promise<number[][]> {
      // Sentence-level summary position: the first (CLS) token vector.
      const output = await extractor(texts, {
        pooling: 'cls',
        truncation: true,
        max_length: maxTokens,
      });
      const d = output.dims[output.dims.length - 1];
      const data: Float32Array = output.data;
      const vectors: number[][] = [];
      for (let i = 0; i < texts.length; i++) {
        vectors.push(Array.from(data.subarray(i * d, (i + 1) * d)));
      }
      return vectors;
    },
  };
}

export async function resolveEncoder(name: string): Promise<Encoder> {
  const hashMatch = /^hash:(\d+)$/.exec(name);
  if (hashMatch) {
    return makeHashEncoder(Number(hashMatch[1]));
  }
  return loadTransformerEncoder(name);
}
