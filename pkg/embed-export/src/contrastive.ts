/**
 * Contrastive task-adaptive pretraining.
 *
 * Two sentences sampled from the same document form a positive pair;
 * every other pair in the batch supplies the negatives. For an anchor
 * from the first view, the candidate set is the batch's second views
 * (and vice versa), scored by temperature-scaled dot products.
 */

import * as tf from "@tensorflow/tfjs";

import { Encoder } from "./encoder";
import { Rng } from "./rng";

export interface PretrainOptions {
  epochs: number;
  tau: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  onStep?: (step: number, loss: number) => void;
}

export const DEFAULT_PRETRAIN: Omit<PretrainOptions, "seed"> = {
  epochs: 5,
  tau: 0.01,
  batchSize: 8,
  learningRate: 0.01,
};

/** Split on sentence-final punctuation followed by whitespace. */
export function splitSentences(text: string): string[] {
  return text
    .split(/(?<=[.?!])\s+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

/**
 * Batch loss with in-batch negatives. z1 and z2 are [B, dim]; entry i of
 * each is one view of document i. Returns the mean per-anchor loss over
 * both directions.
 */
export function infoNceLoss(
  z1: tf.Tensor2D,
  z2: tf.Tensor2D,
  tau: number
): tf.Scalar {
  const logits12 = tf.mul(tf.matMul(z1, z2, false, true), tau);
  const logits21 = tf.mul(tf.matMul(z2, z1, false, true), tau);
  const labels = tf.oneHot(tf.range(0, z1.shape[0], 1, "int32"), z1.shape[0]);
  const loss12 = tf.losses.softmaxCrossEntropy(labels, logits12);
  const loss21 = tf.losses.softmaxCrossEntropy(labels, logits21);
  return tf.div(tf.add(loss12, loss21), 2) as tf.Scalar;
}

export interface PairCorpus {
  usable: { sentences: string[] }[];
  skippedSingleSentence: number;
}

export function pairableDocuments(texts: string[]): PairCorpus {
  const usable: { sentences: string[] }[] = [];
  let skipped = 0;
  for (const text of texts) {
    const sentences = splitSentences(text);
    if (sentences.length >= 2) {
      usable.push({ sentences });
    } else {
      skipped += 1;
    }
  }
  return { usable, skippedSingleSentence: skipped };
}

export class TooFewSentencesError extends Error {}

export function contrastivePretrain(
  encoder: Encoder,
  texts: string[],
  options: PretrainOptions
): { losses: number[]; skippedSingleSentence: number } {
  const { usable, skippedSingleSentence } = pairableDocuments(texts);
  if (usable.length < 2) {
    throw new TooFewSentencesError(
      "need at least two documents that split into two or more sentences"
    );
  }
  const rng = new Rng(options.seed);
  const optimizer = tf.train.adam(options.learningRate);
  const losses: number[] = [];
  let step = 0;
  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const order = rng.shuffle(usable);
    for (let start = 0; start < order.length; start += options.batchSize) {
      const batch = order.slice(start, start + options.batchSize);
      if (batch.length < 2) {
        continue; // a single pair has no in-batch negatives
      }
      const views: [number[], number[]][] = batch.map((doc) => {
        const first = rng.int(doc.sentences.length);
        let second = rng.int(doc.sentences.length - 1);
        if (second >= first) {
          second += 1;
        }
        return [encoder.ids(doc.sentences[first]), encoder.ids(doc.sentences[second])];
      });
      const lossValue = optimizer.minimize(
        () => {
          const z1 = tf.stack(views.map(([a]) => encoder.encodeIds(a))) as tf.Tensor2D;
          const z2 = tf.stack(views.map(([, b]) => encoder.encodeIds(b))) as tf.Tensor2D;
          return infoNceLoss(z1, z2, options.tau);
        },
        true,
        encoder.trainableVariables()
      )!;
      const loss = lossValue.dataSync()[0];
      lossValue.dispose();
      losses.push(loss);
      options.onStep?.(step, loss);
      step += 1;
    }
  }
  optimizer.dispose();
  return { losses, skippedSingleSentence };
}
