#!/usr/bin/env node
// CLI: encode --in texts.jsonl --encoder <name> --out out.emb
//             [--batch 32] [--max-tokens 128]
// Exit status: 0 success, 1 data/encoder errors, 2 usage errors.

import { pathToFileURL } from 'node:url';
import { parseArgs } from 'node:util';

import { encodeTexts } from './encode.js';
import { EncoderLoadError } from './encoder.js';

const USAGE = `usage: socialtyper-encode encode --in texts.jsonl --encoder <name> --out out.emb [--batch 32] [--max-tokens 128]

Encoders:
  hash:<dim>        bundled deterministic feature-hashing encoder (offline)
  <hf model id>     pretrained transformer via @huggingface/transformers
                    (sentence vector = CLS position; needs the optional
                    package and a locally available model)
`;

function usageError(message: string): never {
  process.stderr.write(`error: ${message}\n${USAGE}`);
  process.exit(2);
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== 'encode') {
    usageError(`unknown subcommand ${JSON.stringify(argv[0] ?? '')}`);
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        in: { type: 'string' },
        encoder: { type: 'string' },
        out: { type: 'string' },
        batch: { type: 'string', default: '32' },
        'max-tokens': { type: 'string', default: '128' },
      },
      strict: true,
    });
  } catch (err) {
    usageError((err as Error).message);
  }
  const { in: inPath, encoder, out } = parsed.values;
  if (!inPath || !encoder || !out) {
    usageError('--in, --encoder and --out are required');
  }
  const batchSize = Number(parsed.values.batch);
  const maxTokens = Number(parsed.values['max-tokens']);
  try {
    const result = await encodeTexts({
      inPath,
      encoderName: encoder,
      outPath: out,
      batchSize,
      maxTokens,
    });
    console.error(`encoded ${result.count} texts into ${out} (dim ${result.dim})`);
    return 0;
  } catch (err) {
    if (err instanceof EncoderLoadError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
