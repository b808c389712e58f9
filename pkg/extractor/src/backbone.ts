/**
 * Feature backbones. The only bundled one is a stub: a fixed random linear
 * map seeded by its tag, so the whole toolchain runs without model weights
 * or downloads. Real backbones would slot in behind the same interface.
 */

export interface Backbone {
  tag: string;
  inputDim: number;
  embedDim: number;
  embed(input: Float64Array): Float32Array;
}

/** Deterministic 32-bit PRNG; good enough to fill a fixed weight matrix. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export const STUB_INPUT_DIM = 64;

/** Tags look like "stub-d8" or "stub-d32-s5" (embedding dim, optional seed). */
export function makeBackbone(tag: string): Backbone {
  const m = /^stub-d(\d+)(?:-s(\d+))?$/.exec(tag);
  if (!m) {
    throw new Error(`unknown backbone ${JSON.stringify(tag)}; expected stub-d<dim>[-s<seed>]`);
  }
  const embedDim = parseInt(m[1], 10);
  const seed = m[2] === undefined ? 0 : parseInt(m[2], 10);
  if (embedDim < 1) {
    throw new Error(`backbone dim must be >= 1, got ${embedDim}`);
  }
  const rand = mulberry32(seed * 2654435761 + embedDim);
  const scale = 1 / Math.sqrt(STUB_INPUT_DIM);
  const weights = new Float64Array(STUB_INPUT_DIM * embedDim);
  for (let i = 0; i < weights.length; i++) {
    weights[i] = (2 * rand() - 1) * scale;
  }
  return {
    tag,
    inputDim: STUB_INPUT_DIM,
    embedDim,
    embed(input: Float64Array): Float32Array {
      if (input.length !== STUB_INPUT_DIM) {
        throw new Error(`input length ${input.length}, expected ${STUB_INPUT_DIM}`);
      }
      const out = new Float32Array(embedDim);
      for (let j = 0; j < embedDim; j++) {
        let acc = 0;
        for (let i = 0; i < STUB_INPUT_DIM; i++) {
          acc += input[i] * weights[i * embedDim + j];
        }
        out[j] = Math.fround(acc);
      }
      return out;
    },
  };
}
