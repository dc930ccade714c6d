/**
 * Commands:
 *   pretrain --corpus c.jsonl --out model.json [--epochs 5 --tau 0.01 ...]
 *   export   --corpus c.jsonl --out-docs d.wndr --out-words w.wndr --out-sem s.wndr
 *            [--dim 32 --max-len 512 --seed 0 --tapt --epochs 5 --tau 0.01]
 *   serve    --model model.json
 */

import { readFileSync, writeFileSync } from "node:fs";

import { contrastivePretrain, DEFAULT_PRETRAIN } from "./contrastive";
import { DEFAULT_CONFIG, Encoder, loadEncoder, saveEncoder, SavedEncoder } from "./encoder";
import { loadCorpus } from "./corpus";
import { runExport } from "./export";
import { serve } from "./serve";
import { buildVocab } from "./tokenizer";

interface Flags {
  [key: string]: string | boolean;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      throw new Error(`unexpected argument ${arg}`);
    }
    const name = arg.slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      flags[name] = argv[i + 1];
      i += 1;
    } else {
      flags[name] = true;
    }
  }
  return flags;
}

function num(flags: Flags, name: string, fallback: number): number {
  const raw = flags[name];
  if (raw === undefined || raw === true) {
    return fallback;
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new Error(`--${name} expects a number, got ${raw}`);
  }
  return value;
}

function str(flags: Flags, name: string): string {
  const raw = flags[name];
  if (typeof raw !== "string") {
    throw new Error(`--${name} is required`);
  }
  return raw;
}

function cmdPretrain(flags: Flags): void {
  const docs = loadCorpus(str(flags, "corpus"));
  const seed = num(flags, "seed", 0);
  const vocab = buildVocab(docs.map((d) => d.text));
  const encoder = new Encoder(vocab, {
    ...DEFAULT_CONFIG,
    dim: num(flags, "dim", DEFAULT_CONFIG.dim),
    maxLen: num(flags, "max-len", DEFAULT_CONFIG.maxLen),
    seed,
  });
  const outcome = contrastivePretrain(encoder, docs.map((d) => d.text), {
    ...DEFAULT_PRETRAIN,
    epochs: num(flags, "epochs", DEFAULT_PRETRAIN.epochs),
    tau: num(flags, "tau", DEFAULT_PRETRAIN.tau),
    batchSize: num(flags, "batch-size", DEFAULT_PRETRAIN.batchSize),
    learningRate: num(flags, "learning-rate", DEFAULT_PRETRAIN.learningRate),
    seed,
    onStep: (step, loss) => {
      process.stderr.write(`step ${step} loss ${loss.toFixed(6)}\n`);
    },
  });
  writeFileSync(str(flags, "out"), JSON.stringify(saveEncoder(encoder)));
  process.stdout.write(
    JSON.stringify({
      steps: outcome.losses.length,
      final_loss: outcome.losses.at(-1) ?? null,
      skipped_single_sentence: outcome.skippedSingleSentence,
    }) + "\n"
  );
}

function cmdExport(flags: Flags): void {
  const docs = loadCorpus(str(flags, "corpus"));
  const summary = runExport({
    docs,
    outDocs: str(flags, "out-docs"),
    outWords: str(flags, "out-words"),
    outSem: str(flags, "out-sem"),
    dim: num(flags, "dim", DEFAULT_CONFIG.dim),
    maxLen: num(flags, "max-len", DEFAULT_CONFIG.maxLen),
    seed: num(flags, "seed", 0),
    tapt: flags["tapt"]
      ? {
          epochs: num(flags, "epochs", DEFAULT_PRETRAIN.epochs),
          tau: num(flags, "tau", DEFAULT_PRETRAIN.tau),
          batchSize: num(flags, "batch-size", DEFAULT_PRETRAIN.batchSize),
          learningRate: num(flags, "learning-rate", DEFAULT_PRETRAIN.learningRate),
        }
      : null,
  });
  process.stdout.write(JSON.stringify(summary) + "\n");
}

async function cmdServe(flags: Flags): Promise<void> {
  const saved = JSON.parse(readFileSync(str(flags, "model"), "utf-8")) as SavedEncoder;
  const encoder = loadEncoder(saved);
  await serve(encoder);
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    const flags = parseFlags(rest);
    if (command === "pretrain") {
      cmdPretrain(flags);
    } else if (command === "export") {
      cmdExport(flags);
    } else if (command === "serve") {
      await cmdServe(flags);
    } else {
      process.stderr.write(
        "usage: embed-export <pretrain|export|serve> [--flags]\n"
      );
      return 2;
    }
    return 0;
  } catch (err) {
    process.stderr.write(JSON.stringify({ error: String(err) }) + "\n");
    return 1;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
