/**
 * WNDR vector-file writer/reader.
 *
 * Layout: magic "WNDR1\n", an ASCII header line "dim=<u32> count=<u64>\n",
 * then per record a little-endian u16 key length, the UTF-8 key bytes,
 * and dim little-endian float32 components.
 */

import { readFileSync, writeFileSync } from "node:fs";

const MAGIC = Buffer.from("WNDR1\n", "ascii");

export function writeVectors(
  path: string,
  vectors: Map<string, Float32Array>,
  dim: number
): void {
  const chunks: Buffer[] = [MAGIC, Buffer.from(`dim=${dim} count=${vectors.size}\n`, "ascii")];
  for (const [key, vec] of vectors) {
    if (vec.length !== dim) {
      throw new Error(`vector for ${key} has length ${vec.length}, expected ${dim}`);
    }
    const keyBytes = Buffer.from(key, "utf-8");
    if (keyBytes.length > 0xffff) {
      throw new Error(`key too long for WNDR record: ${key.slice(0, 32)}...`);
    }
    const header = Buffer.alloc(2);
    header.writeUInt16LE(keyBytes.length, 0);
    const payload = Buffer.alloc(4 * dim);
    for (let i = 0; i < dim; i++) {
      payload.writeFloatLE(vec[i], 4 * i);
    }
    chunks.push(header, keyBytes, payload);
  }
  writeFileSync(path, Buffer.concat(chunks));
}

export function readVectors(path: string): { dim: number; vectors: Map<string, Float32Array> } {
  const data = readFileSync(path);
  if (!data.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error(`${path}: bad magic bytes`);
  }
  const nl = data.indexOf(0x0a, MAGIC.length);
  if (nl < 0) {
    throw new Error(`${path}: missing header line`);
  }
  const header = data.subarray(MAGIC.length, nl).toString("ascii");
  const match = /^dim=(\d+) count=(\d+)$/.exec(header);
  if (!match) {
    throw new Error(`${path}: unparseable header`);
  }
  const dim = Number(match[1]);
  const count = Number(match[2]);
  const vectors = new Map<string, Float32Array>();
  let pos = nl + 1;
  for (let r = 0; r < count; r++) {
    if (pos + 2 > data.length) {
      throw new Error(`${path}: truncated record header`);
    }
    const keyLen = data.readUInt16LE(pos);
    pos += 2;
    if (pos + keyLen + 4 * dim > data.length) {
      throw new Error(`${path}: truncated payload`);
    }
    const key = data.subarray(pos, pos + keyLen).toString("utf-8");
    pos += keyLen;
    const vec = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vec[i] = data.readFloatLE(pos + 4 * i);
    }
    pos += 4 * dim;
    vectors.set(key, vec);
  }
  return { dim, vectors };
}
