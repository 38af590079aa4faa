/**
 * Sentence encoders behind one interface.
 *
 * The pinned default is a deterministic signed feature-hashing encoder
 * ("hash-384"): no downloads, no weights, bit-identical output across runs
 * and machines. Any other encoder name is treated as a pretrained model id
 * for the `@xenova/transformers` ecosystem and loaded dynamically; if that
 * package (or its model) is unavailable the loader rejects, and the CLI
 * exits nonzero.
 */

export interface Encoder {
  readonly name: string;
  readonly dim: number;
  /** Encode a batch of texts into vectors of exactly `dim` finite numbers. */
  encode(texts: string[]): Promise<number[][]>;
}

export const DEFAULT_ENCODER = "hash-384";

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

/** FNV-1a, 32-bit unsigned. */
function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

/**
 * Bag-of-tokens with signed feature hashing, L2-normalized.
 *
 * Each token contributes +-1 at index fnv1a("i:" + token) % dim, with the
 * sign drawn from an independent hash, which keeps collisions unbiased.
 * Texts with no tokens map to the zero vector.
 */
export class HashEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;

  constructor(dim = 384) {
    if (!Number.isInteger(dim) || dim < 8) {
      throw new Error(`hash encoder dim must be an integer >= 8, got ${dim}`);
    }
    this.dim = dim;
    this.name = `hash-${dim}`;
  }

  encodeOne(text: string): number[] {
    const v = new Float64Array(this.dim);
    for (const token of tokenize(text)) {
      const idx = fnv1a(`i:${token}`) % this.dim;
      const sign = fnv1a(`s:${token}`) & 1 ? 1 : -1;
      v[idx] += sign;
    }
    let norm = 0;
    for (let i = 0; i < this.dim; i++) norm += v[i] * v[i];
    norm = Math.sqrt(norm);
    const out = new Array<number>(this.dim);
    for (let i = 0; i < this.dim; i++) out[i] = norm > 0 ? v[i] / norm : 0;
    return out;
  }

  async encode(texts: string[]): Promise<number[][]> {
    return texts.map((t) => this.encodeOne(t));
  }
}

/** Transformer-backed encoder via dynamic import; optional dependency. */
class TransformersEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;
  private readonly pipe: (text: string, opts: object) => Promise<{ data: ArrayLike<number> }>;

  private constructor(name: string, dim: number, pipe: TransformersEncoder["pipe"]) {
    this.name = name;
    this.dim = dim;
    this.pipe = pipe;
  }

  static async load(model: string): Promise<TransformersEncoder> {
    let pipeline: (task: string, model: string) => Promise<unknown>;
    try {
      ({ pipeline } = await import("@xenova/transformers" as string));
    } catch (err) {
      throw new Error(
        `encoder load failure: ${model} needs the optional @xenova/transformers ` +
          `package (npm install @xenova/transformers); the built-in "${DEFAULT_ENCODER}" `
          + `encoder runs without it (${(err as Error).message})`,
      );
    }
    const pipe = (await pipeline("feature-extraction", model)) as TransformersEncoder["pipe"];
    const probe = await pipe("dimension probe", { pooling: "mean", normalize: true });
    return new TransformersEncoder(model, probe.data.length, pipe);
  }

  async encode(texts: string[]): Promise<number[][]> {
    const out: number[][] = [];
    for (const text of texts) {
      const result = await this.pipe(text, { pooling: "mean", normalize: true });
      out.push(Array.from(result.data));
    }
    return out;
  }
}

export async function resolveEncoder(name: string): Promise<Encoder> {
  const hashMatch = /^hash-(\d+)$/.exec(name);
  if (hashMatch) {
    return new HashEncoder(Number(hashMatch[1]));
  }
  if (name === "hash") {
    return new HashEncoder();
  }
  return TransformersEncoder.load(name);
}
