/**
 * Line-protocol embedder: one JSON request {"text": str} per stdin line,
 * one JSON response {"vector": [floats]} per stdout line, in order.
 * Malformed requests produce {"error": "parse"} and the process keeps
 * serving.
 */

import { createInterface } from "node:readline";

import { Encoder } from "./encoder";

export function serve(encoder: Encoder, input = process.stdin, output = process.stdout): Promise<void> {
  const lines = createInterface({ input, terminal: false });
  return new Promise((resolve) => {
    lines.on("line", (line) => {
      if (!line.trim()) {
        return;
      }
      let text: string;
      try {
        const request = JSON.parse(line) as { text?: unknown };
        if (typeof request.text !== "string") {
          throw new Error("missing text field");
        }
        text = request.text;
      } catch {
        output.write(JSON.stringify({ error: "parse" }) + "\n");
        return;
      }
      const vector = Array.from(encoder.encodeText(text));
      output.write(JSON.stringify({ vector }) + "\n");
    });
    lines.on("close", resolve);
  });
}
