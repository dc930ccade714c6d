/** JSON Lines corpus reader: {"id": str, "text": str, "label": int?}. */

import { readFileSync } from "node:fs";

export interface CorpusDocument {
  id: string;
  text: string;
}

export function loadCorpus(path: string): CorpusDocument[] {
  const docs: CorpusDocument[] = [];
  const seen = new Set<string>();
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, index) => {
    if (!line.trim()) {
      return;
    }
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch (err) {
      throw new Error(`malformed record at line ${index + 1}: ${err}`);
    }
    const rec = record as { id?: unknown; text?: unknown };
    if (typeof rec.id !== "string" || typeof rec.text !== "string") {
      throw new Error(`malformed record at line ${index + 1}: needs string id/text`);
    }
    if (seen.has(rec.id)) {
      throw new Error(`duplicate document id ${rec.id}`);
    }
    if (!rec.text.trim()) {
      throw new Error(`document ${rec.id} has empty text`);
    }
    seen.add(rec.id);
    docs.push({ id: rec.id, text: rec.text });
  });
  return docs;
}
