/**
 * Dataset access. Offline the only supported source is a folder dataset,
 * addressed as "folder:<path>": <path>/<split>/<class id>/<sample files>.
 * Each file is one sample; its bytes, scaled to [0, 1] and cycled to the
 * backbone's input length, stand in for decoded pixels. Named datasets
 * that need a download (cifar100, cub200) are recognized but rejected.
 */

import { readdirSync, readFileSync, statSync } from "node:fs";
import { join } from "node:path";

export const SPLITS = ["train", "test"] as const;
export type Split = (typeof SPLITS)[number];

export interface Sample {
  classId: number;
  path: string;
}

export const DOWNLOAD_ONLY_DATASETS = ["cifar100", "cub200"];

export function resolveDatasetRoot(dataset: string): string {
  if (dataset.startsWith("folder:")) {
    const root = dataset.slice("folder:".length);
    if (root.length === 0) {
      throw new Error("folder dataset needs a path: folder:<path>");
    }
    return root;
  }
  if (DOWNLOAD_ONLY_DATASETS.includes(dataset)) {
    throw new Error(`dataset ${dataset} needs a download; only folder:<path> works offline`);
  }
  throw new Error(`unknown dataset ${JSON.stringify(dataset)}`);
}

/** All samples of a split, sorted by (class id, file name) so output order
 * never depends on directory enumeration order. */
export function listSamples(root: string, split: Split, classFilter: number[] | null): Sample[] {
  const splitDir = join(root, split);
  const classDirs = readdirSync(splitDir).filter((name) => {
    if (!/^\d+$/.test(name)) {
      throw new Error(`class directory ${JSON.stringify(name)} is not a class id`);
    }
    return statSync(join(splitDir, name)).isDirectory();
  });
  const wanted = classFilter === null ? null : new Set(classFilter);
  const samples: Sample[] = [];
  for (const dir of classDirs.sort((a, b) => Number(a) - Number(b))) {
    const classId = Number(dir);
    if (wanted !== null && !wanted.has(classId)) {
      continue;
    }
    for (const file of readdirSync(join(splitDir, dir)).sort()) {
      samples.push({ classId, path: join(splitDir, dir, file) });
    }
  }
  return samples;
}

/** File bytes as backbone input: /255 into [0, 1], cycled to inputDim. */
export function loadSampleInput(path: string, inputDim: number): Float64Array {
  const bytes = readFileSync(path);
  if (bytes.length === 0) {
    throw new Error(`empty sample file ${path}`);
  }
  const out = new Float64Array(inputDim);
  for (let i = 0; i < inputDim; i++) {
    out[i] = bytes[i % bytes.length] / 255;
  }
  return out;
}
