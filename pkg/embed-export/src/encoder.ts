/**
 * Compact trainable transformer encoder.
 *
 * One attention block plus a feed-forward block over token embeddings
 * with learned positions; a text embedding is the arithmetic mean of the
 * last-layer token states. Sequences are encoded one at a time (no
 * padding), so results do not depend on batch composition.
 */

import * as tf from "@tensorflow/tfjs";

import { Rng } from "./rng";
import { tokenize } from "./tokenizer";

export interface EncoderConfig {
  dim: number;
  heads: number;
  ffDim: number;
  maxLen: number;
  seed: number;
}

export const DEFAULT_CONFIG: Omit<EncoderConfig, "seed"> = {
  dim: 32,
  heads: 2,
  ffDim: 64,
  maxLen: 512,
};

type WeightMap = Map<string, tf.Variable>;

export class Encoder {
  readonly config: EncoderConfig;
  readonly vocab: string[];
  private readonly tokenIds: Map<string, number>;
  readonly weights: WeightMap;

  constructor(vocab: string[], config: EncoderConfig) {
    if (config.dim % config.heads !== 0) {
      throw new Error("dim must be divisible by heads");
    }
    this.config = config;
    this.vocab = vocab;
    this.tokenIds = new Map(vocab.map((tok, i) => [tok, i]));
    this.weights = initWeights(vocab.length, config);
  }

  ids(text: string): number[] {
    const ids = tokenize(text).map((tok) => this.tokenIds.get(tok) ?? 0);
    if (ids.length === 0) {
      ids.push(0);
    }
    return ids.slice(0, this.config.maxLen);
  }

  /** Last-layer token states for one sequence, shape [T, dim]. */
  tokenStates(ids: number[]): tf.Tensor2D {
    const w = this.weights;
    const { dim, heads } = this.config;
    const headDim = dim / heads;
    const T = ids.length;

    const embedded = tf.gather(w.get("embedding")! as tf.Tensor2D, ids);
    const positions = tf.slice(w.get("positional")! as tf.Tensor2D, [0, 0], [T, dim]);
    let x = tf.add(embedded, positions) as tf.Tensor2D;

    const project = (name: string) =>
      tf.add(tf.matMul(x, w.get(name)! as tf.Tensor2D), w.get(`${name}_b`)!) as tf.Tensor2D;
    const toHeads = (t: tf.Tensor2D) =>
      tf.transpose(tf.reshape(t, [T, heads, headDim]), [1, 0, 2]) as tf.Tensor3D;

    const q = toHeads(project("wq"));
    const k = toHeads(project("wk"));
    const v = toHeads(project("wv"));
    const scores = tf.div(
      tf.matMul(q, k, false, true),
      Math.sqrt(headDim)
    );
    const attention = tf.softmax(scores, -1);
    const context = tf.reshape(
      tf.transpose(tf.matMul(attention, v), [1, 0, 2]),
      [T, dim]
    ) as tf.Tensor2D;
    const attnOut = tf.add(
      tf.matMul(context, w.get("wo")! as tf.Tensor2D),
      w.get("wo_b")!
    ) as tf.Tensor2D;
    x = layerNorm(tf.add(x, attnOut) as tf.Tensor2D, w.get("ln1_g")!, w.get("ln1_b")!);

    const hidden = tf.relu(
      tf.add(tf.matMul(x, w.get("ff1")! as tf.Tensor2D), w.get("ff1_b")!)
    ) as tf.Tensor2D;
    const ffOut = tf.add(
      tf.matMul(hidden, w.get("ff2")! as tf.Tensor2D),
      w.get("ff2_b")!
    ) as tf.Tensor2D;
    return layerNorm(tf.add(x, ffOut) as tf.Tensor2D, w.get("ln2_g")!, w.get("ln2_b")!);
  }

  /** Mean of the last-layer token states, shape [dim]. */
  encodeIds(ids: number[]): tf.Tensor1D {
    return tf.mean(this.tokenStates(ids), 0) as tf.Tensor1D;
  }

  encodeText(text: string): Float32Array {
    return tf.tidy(() => this.encodeIds(this.ids(text))).dataSync() as Float32Array;
  }

  trainableVariables(): tf.Variable[] {
    return [...this.weights.values()];
  }

  dispose(): void {
    for (const variable of this.weights.values()) {
      variable.dispose();
    }
  }
}

function layerNorm(x: tf.Tensor2D, gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor2D {
  const mean = tf.mean(x, 1, true);
  const centered = tf.sub(x, mean);
  const variance = tf.mean(tf.square(centered), 1, true);
  const normed = tf.div(centered, tf.sqrt(tf.add(variance, 1e-5)));
  return tf.add(tf.mul(normed, gamma), beta) as tf.Tensor2D;
}

function initWeights(vocabSize: number, config: EncoderConfig): WeightMap {
  const rng = new Rng(config.seed);
  const { dim, ffDim, maxLen } = config;

  const normal = (rows: number, cols: number, scale: number) => {
    const data = new Float32Array(rows * cols);
    for (let i = 0; i < data.length; i++) {
      data[i] = scale * rng.normal();
    }
    return tf.variable(tf.tensor2d(data, [rows, cols]));
  };
  const zeros = (size: number) => tf.variable(tf.zeros([size]));
  const ones = (size: number) => tf.variable(tf.ones([size]));

  const scale = 1 / Math.sqrt(dim);
  const weights: WeightMap = new Map();
  weights.set("embedding", normal(vocabSize, dim, 1.0));
  weights.set("positional", normal(maxLen, dim, 0.1));
  for (const name of ["wq", "wk", "wv", "wo"]) {
    weights.set(name, normal(dim, dim, scale));
    weights.set(`${name}_b`, zeros(dim));
  }
  weights.set("ln1_g", ones(dim));
  weights.set("ln1_b", zeros(dim));
  weights.set("ff1", normal(dim, ffDim, scale));
  weights.set("ff1_b", zeros(ffDim));
  weights.set("ff2", normal(ffDim, dim, 1 / Math.sqrt(ffDim)));
  weights.set("ff2_b", zeros(dim));
  weights.set("ln2_g", ones(dim));
  weights.set("ln2_b", zeros(dim));
  return weights;
}

export interface SavedEncoder {
  config: EncoderConfig;
  vocab: string[];
  weights: Record<string, { shape: number[]; values: number[] }>;
}

export function saveEncoder(encoder: Encoder): SavedEncoder {
  const weights: SavedEncoder["weights"] = {};
  for (const [name, variable] of encoder.weights) {
    weights[name] = {
      shape: variable.shape as number[],
      values: Array.from(variable.dataSync() as Float32Array),
    };
  }
  return { config: encoder.config, vocab: encoder.vocab, weights };
}

export function loadEncoder(saved: SavedEncoder): Encoder {
  const encoder = new Encoder(saved.vocab, saved.config);
  for (const [name, spec] of Object.entries(saved.weights)) {
    const variable = encoder.weights.get(name);
    if (!variable) {
      throw new Error(`unknown weight ${name} in saved encoder`);
    }
    variable.assign(tf.tensor(spec.values, spec.shape as [number, number]));
  }
  return encoder;
}
