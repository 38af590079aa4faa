#!/usr/bin/env node
/**
 * export-embeddings --in <utterances.jsonl> --out <embeddings.jsonl>
 *                   [--encoder NAME] [--batch-size N]
 *
 * Exits nonzero with a line-numbered message on input parse failure, and
 * with an explanation when the requested encoder cannot be loaded.
 */
import { DEFAULT_ENCODER } from "./encoder.js";
import { exportEmbeddings } from "./export.js";

const USAGE =
  "usage: export-embeddings --in <jsonl> --out <jsonl> " +
  `[--encoder NAME (default ${DEFAULT_ENCODER})] [--batch-size N]`;

interface Args {
  inPath: string;
  outPath: string;
  encoder?: string;
  batchSize?: number;
}

function parseArgs(argv: string[]): Args {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(USAGE);
    }
    values.set(flag, value);
  }
  const known = new Set(["--in", "--out", "--encoder", "--batch-size"]);
  for (const flag of values.keys()) {
    if (!known.has(flag)) throw new Error(`unknown flag ${flag}\n${USAGE}`);
  }
  const inPath = values.get("--in");
  const outPath = values.get("--out");
  if (!inPath || !outPath) throw new Error(USAGE);
  const args: Args = { inPath, outPath, encoder: values.get("--encoder") };
  const batch = values.get("--batch-size");
  if (batch !== undefined) {
    args.batchSize = Number(batch);
  }
  return args;
}

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const summary = await exportEmbeddings({
      inPath: args.inPath,
      outPath: args.outPath,
      encoder: args.encoder,
      batchSize: args.batchSize,
    });
    console.log(
      `${summary.rows} rows -> ${args.outPath} (encoder ${summary.encoder}, dim ${summary.dim})`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("export-embeddings")) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
