import { readFileSync, writeFileSync } from "node:fs";
import { resolve } from "node:path";

import { DEFAULT_ENCODER, resolveEncoder } from "./encoder.js";
import { embeddingLine, parseUtterances } from "./jsonl.js";

export interface ExportConfig {
  inPath: string;
  outPath: string;
  encoder?: string;
  batchSize?: number;
}

export interface ExportSummary {
  rows: number;
  dim: number;
  encoder: string;
}

/**
 * Encode an utterance JSONL file into embedding JSONL.
 *
 * One output line per input line, ids and order preserved, one constant
 * dimension, finite values throughout; the result loads through the engine's
 * embedding loader without errors.
 */
export async function exportEmbeddings(config: ExportConfig): Promise<ExportSummary> {
  const batchSize = config.batchSize ?? 64;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${config.batchSize}`);
  }
  if (resolve(config.inPath) === resolve(config.outPath)) {
    throw new Error("input and output paths must differ");
  }
  const encoder = await resolveEncoder(config.encoder ?? DEFAULT_ENCODER);
  const rows = parseUtterances(readFileSync(config.inPath, "utf-8"));

  const lines: string[] = [];
  for (let start = 0; start < rows.length; start += batchSize) {
    const batch = rows.slice(start, start + batchSize);
    const vectors = await encoder.encode(batch.map((r) => r.text));
    for (let i = 0; i < batch.length; i++) {
      if (vectors[i].length !== encoder.dim) {
        throw new Error(
          `encoder returned dim ${vectors[i].length}, expected ${encoder.dim}`,
        );
      }
      lines.push(embeddingLine(batch[i].id, vectors[i]));
    }
  }
  writeFileSync(config.outPath, lines.join("\n") + "\n", "utf-8");
  return { rows: rows.length, dim: encoder.dim, encoder: encoder.name };
}
