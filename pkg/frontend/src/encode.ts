// The encode pipeline: text batch file -> encoder -> EMB1 file.

import { readFile, writeFile } from 'node:fs/promises';

import { writeEmb1, type Emb1Record } from './emb1.js';
import { resolveEncoder } from './encoder.js';
import { parseTextBatch, vectorId } from './jsonl.js';

export interface EncodeOptions {
  inPath: string;
  encoderName: string;
  outPath: string;
  batchSize: number;
  maxTokens: number;
}

export interface EncodeResult {
  count: number;
  dim: number;
}

export const MIN_MAX_TOKENS = 8;

export async function encodeTexts(options: EncodeOptions): Promise<EncodeResult> {
  if (!Number.isInteger(options.batchSize) || options.batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${options.batchSize}`);
  }
  if (!Number.isInteger(options.maxTokens) || options.maxTokens < MIN_MAX_TOKENS) {
    throw new Error(`max tokens must be an integer >= ${MIN_MAX_TOKENS}`);
  }
  const content = await readFile(options.inPath, 'utf-8');
  const items = parseTextBatch(content);
  const encoder = await resolveEncoder(options.encoderName);
  const records: Emb1Record[] = [];
  for (let start = 0; start < items.length; start += options.batchSize) {
    const batch = items.slice(start, start + options.batchSize);
    const vectors = await encoder.encode(
      batch.map((item) => item.text),
      options.maxTokens,
    );
    for (let i = 0; i < batch.length; i++) {
      records.push({ id: vectorId(batch[i]), vector: vectors[i] });
    }
  }
  await writeFile(options.outPath, writeEmb1(encoder.dim, records));
  return { count: records.length, dim: encoder.dim };
}
