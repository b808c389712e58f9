/**
 * GDE1 embedding file format.
 *
 * Layout, all little-endian, no padding:
 *   magic "GDE1" (4 bytes), u32 version = 1, u32 dim, u64 count,
 *   then count records of (u32 class_id, dim x f32).
 */

import { writeFileSync, readFileSync } from "node:fs";

export const GDE1_MAGIC = "GDE1";
export const GDE1_VERSION = 1;

export interface EmbeddingRecord {
  classId: number;
  vector: Float32Array;
}

export function encodeGde1(dim: number, records: EmbeddingRecord[]): Buffer {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`dim must be a positive integer, got ${dim}`);
  }
  const headerSize = 4 + 4 + 4 + 8;
  const recordSize = 4 + 4 * dim;
  const buf = Buffer.alloc(headerSize + recordSize * records.length);
  buf.write(GDE1_MAGIC, 0, "ascii");
  buf.writeUInt32LE(GDE1_VERSION, 4);
  buf.writeUInt32LE(dim, 8);
  buf.writeBigUInt64LE(BigInt(records.length), 12);
  let at = headerSize;
  for (const rec of records) {
    if (!Number.isInteger(rec.classId) || rec.classId < 0) {
      throw new Error(`class id must be a non-negative integer, got ${rec.classId}`);
    }
    if (rec.vector.length !== dim) {
      throw new Error(`vector length ${rec.vector.length} does not match dim ${dim}`);
    }
    for (const v of rec.vector) {
      if (!Number.isFinite(v)) {
        throw new Error(`non-finite component in class ${rec.classId}`);
      }
    }
    buf.writeUInt32LE(rec.classId, at);
    at += 4;
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(rec.vector[i], at);
      at += 4;
    }
  }
  return buf;
}

export function writeGde1(path: string, dim: number, records: EmbeddingRecord[]): void {
  writeFileSync(path, encodeGde1(dim, records));
}

export function readGde1(path: string): { dim: number; records: EmbeddingRecord[] } {
  const buf = readFileSync(path);
  if (buf.length < 20) {
    throw new Error("truncated header");
  }
  if (buf.toString("ascii", 0, 4) !== GDE1_MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== GDE1_VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const dim = buf.readUInt32LE(8);
  const count = Number(buf.readBigUInt64LE(12));
  const recordSize = 4 + 4 * dim;
  if (buf.length !== 20 + recordSize * count) {
    throw new Error(`payload is ${buf.length - 20} bytes, expected ${recordSize * count}`);
  }
  const records: EmbeddingRecord[] = [];
  let at = 20;
  for (let r = 0; r < count; r++) {
    const classId = buf.readUInt32LE(at);
    at += 4;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = buf.readFloatLE(at);
      at += 4;
    }
    records.push({ classId, vector });
  }
  return { dim, records };
}
