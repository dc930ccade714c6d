/**
 * Word tokenizer kept in lockstep with the classifier library.
 *
 * The rules (alphanumeric runs, lowercase, min length, stopword list)
 * are frozen in the shared tokenizer_spec.json file; the test suite
 * checks this implementation against that file's golden cases.
 */

import { existsSync, readFileSync } from "node:fs";
import { join, resolve } from "node:path";

const SPEC_RELATIVE = join("src", "retrilabel", "data", "tokenizer_spec.json");

function findSpecFile(): string {
  const override = process.env.TOKENIZER_SPEC;
  if (override) {
    return override;
  }
  // Prefer paths relative to this module (works wherever the process is
  // launched from), then walk up from the working directory.
  const roots: string[] = [];
  if (typeof __dirname !== "undefined") {
    roots.push(resolve(__dirname, "..", ".."), resolve(__dirname, ".."));
  }
  roots.push(process.cwd());
  for (const root of roots) {
    let dir = root;
    for (let depth = 0; depth < 6; depth++) {
      const candidate = join(dir, SPEC_RELATIVE);
      if (existsSync(candidate)) {
        return candidate;
      }
      dir = resolve(dir, "..");
    }
  }
  throw new Error(
    `cannot locate ${SPEC_RELATIVE}; set TOKENIZER_SPEC to its path`
  );
}

export interface TokenizerRules {
  min_token_length: number;
  stopwords: string[];
  golden: { text: string; tokens: string[] }[];
}

let cachedRules: TokenizerRules | null = null;
let cachedStopwords: Set<string> | null = null;

export function tokenizerRules(specPath?: string): TokenizerRules {
  if (!cachedRules) {
    cachedRules = JSON.parse(
      readFileSync(specPath ?? findSpecFile(), "utf-8")
    ) as TokenizerRules;
    cachedStopwords = new Set(cachedRules.stopwords);
  }
  return cachedRules;
}

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenize(text: string): string[] {
  const rules = tokenizerRules();
  const stopwords = cachedStopwords!;
  const out: string[] = [];
  for (const match of text.matchAll(TOKEN_RE)) {
    const token = match[0].toLowerCase();
    if (token.length < rules.min_token_length || stopwords.has(token)) {
      continue;
    }
    out.push(token);
  }
  return out;
}

/** Sorted unique tokens across the corpus, with <unk> reserved at id 0. */
export function buildVocab(texts: string[]): string[] {
  const seen = new Set<string>();
  for (const text of texts) {
    for (const token of tokenize(text)) {
      seen.add(token);
    }
  }
  return ["<unk>", ...[...seen].sort()];
}
