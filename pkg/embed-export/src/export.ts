/**
 * Export the three vector tables the classifier library consumes.
 *
 * Document vectors and retrieval-space word vectors come from the
 * task-adapted encoder; semantic-space word vectors come from the base
 * (untrained) encoder constructed from the same seed. Words are encoded
 * in isolation; documents are truncated at the configured max length.
 */

import * as tf from "@tensorflow/tfjs";

import { contrastivePretrain, DEFAULT_PRETRAIN, PretrainOptions } from "./contrastive";
import { CorpusDocument } from "./corpus";
import { DEFAULT_CONFIG, Encoder, EncoderConfig } from "./encoder";
import { buildVocab } from "./tokenizer";
import { writeVectors } from "./wndr";

export interface ExportJob {
  docs: CorpusDocument[];
  outDocs: string;
  outWords: string;
  outSem: string;
  dim?: number;
  maxLen?: number;
  seed?: number;
  tapt?: Partial<PretrainOptions> | null;
  onStep?: (step: number, loss: number) => void;
}

export interface ExportSummary {
  dim: number;
  vocabSize: number;
  documents: number;
  taptSteps: number;
  skippedSingleSentence: number;
  finalLoss: number | null;
}

function encodeTable(
  encoder: Encoder,
  keys: string[],
  textOf: (key: string) => string
): Map<string, Float32Array> {
  const table = new Map<string, Float32Array>();
  for (const key of keys) {
    table.set(key, encoder.encodeText(textOf(key)));
  }
  return table;
}

export function runExport(job: ExportJob): ExportSummary {
  const seed = job.seed ?? 0;
  const config: EncoderConfig = {
    ...DEFAULT_CONFIG,
    dim: job.dim ?? DEFAULT_CONFIG.dim,
    maxLen: job.maxLen ?? DEFAULT_CONFIG.maxLen,
    seed,
  };
  const vocab = buildVocab(job.docs.map((d) => d.text));

  // Same seed, so both encoders start from identical weights; only the
  // retrieval encoder is trained further.
  const retrievalEncoder = new Encoder(vocab, config);
  const baseEncoder = new Encoder(vocab, config);

  let taptSteps = 0;
  let skipped = 0;
  let finalLoss: number | null = null;
  if (job.tapt) {
    const options: PretrainOptions = {
      ...DEFAULT_PRETRAIN,
      ...job.tapt,
      seed: job.tapt.seed ?? seed,
      onStep: job.onStep,
    };
    const outcome = contrastivePretrain(
      retrievalEncoder,
      job.docs.map((d) => d.text),
      options
    );
    taptSteps = outcome.losses.length;
    skipped = outcome.skippedSingleSentence;
    finalLoss = outcome.losses.at(-1) ?? null;
  }

  const byId = new Map(job.docs.map((d) => [d.id, d.text]));
  const docTable = encodeTable(
    retrievalEncoder,
    job.docs.map((d) => d.id),
    (id) => byId.get(id)!
  );
  const words = vocab.filter((w) => w !== "<unk>");
  const wordTable = encodeTable(retrievalEncoder, words, (w) => w);
  const semTable = encodeTable(baseEncoder, words, (w) => w);

  writeVectors(job.outDocs, docTable, config.dim);
  writeVectors(job.outWords, wordTable, config.dim);
  writeVectors(job.outSem, semTable, config.dim);

  retrievalEncoder.dispose();
  baseEncoder.dispose();
  tf.disposeVariables();

  return {
    dim: config.dim,
    vocabSize: vocab.length,
    documents: job.docs.length,
    taptSteps,
    skippedSingleSentence: skipped,
    finalLoss,
  };
}
