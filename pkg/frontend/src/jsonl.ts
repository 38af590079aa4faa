/** Utterance JSONL in, embedding JSONL out (the oir engine's formats). */

export interface UtteranceRow {
  id: string;
  text: string;
}

export class LineError extends Error {
  constructor(readonly lineNo: number, message: string) {
    super(`line ${lineNo}: ${message}`);
  }
}

/** Parse utterance JSONL: keys "id" and "text", unique non-empty ids. */
export function parseUtterances(content: string): UtteranceRow[] {
  const rows: UtteranceRow[] = [];
  const seen = new Set<string>();
  const lines = content.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const lineNo = i + 1;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new LineError(lineNo, `invalid JSON: ${(err as Error).message}`);
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      throw new LineError(lineNo, "expected a JSON object");
    }
    const id = (obj as Record<string, unknown>).id;
    const text = (obj as Record<string, unknown>).text;
    if (typeof id !== "string" || id.length === 0) {
      throw new LineError(lineNo, 'missing or empty "id"');
    }
    if (typeof text !== "string" || text.trim().length === 0) {
      throw new LineError(lineNo, 'missing or empty "text"');
    }
    if (seen.has(id)) {
      throw new LineError(lineNo, `duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
    rows.push({ id, text });
  }
  if (rows.length === 0) {
    throw new LineError(1, "no utterances in input");
  }
  return rows;
}

/** One {"id", "vector"} object per line; finite numbers only. */
export function embeddingLine(id: string, vector: number[]): string {
  for (const x of vector) {
    if (!Number.isFinite(x)) {
      throw new Error(`non-finite value in vector for id ${JSON.stringify(id)}`);
    }
  }
  return JSON.stringify({ id, vector });
}
