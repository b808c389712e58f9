/** Extraction job: dataset + backbone + split in, one GDE1 file out. */

import { makeBackbone } from "./backbone.js";
import { listSamples, loadSampleInput, resolveDatasetRoot, SPLITS, type Split } from "./dataset.js";
import { writeGde1, type EmbeddingRecord } from "./gde1.js";

export interface ExtractorJob {
  dataset: string;
  backbone: string;
  split: Split;
  classes: number[] | null;
  out: string;
}

export function runJob(job: ExtractorJob): { count: number; dim: number } {
  if (!SPLITS.includes(job.split)) {
    throw new Error(`split must be one of ${SPLITS.join(", ")}, got ${JSON.stringify(job.split)}`);
  }
  const root = resolveDatasetRoot(job.dataset);
  const backbone = makeBackbone(job.backbone);
  const samples = listSamples(root, job.split, job.classes);
  const records: EmbeddingRecord[] = samples.map((s) => ({
    classId: s.classId,
    vector: backbone.embed(loadSampleInput(s.path, backbone.inputDim)),
  }));
  writeGde1(job.out, backbone.embedDim, records);
  return { count: records.length, dim: backbone.embedDim };
}
