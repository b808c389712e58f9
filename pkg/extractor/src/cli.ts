#!/usr/bin/env node
/** CLI: extract --dataset --backbone --split --classes --out */

import { parseArgs } from "node:util";

import { runJob } from "./extract.js";
import type { Split } from "./dataset.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        dataset: { type: "string" },
        backbone: { type: "string" },
        split: { type: "string", default: "train" },
        classes: { type: "string" },
        out: { type: "string" },
      },
    });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  const { values, positionals } = parsed;
  if (positionals.length !== 1 || positionals[0] !== "extract") {
    process.stderr.write("usage: gddsg-extract extract --dataset D --backbone B --split S [--classes a,b] --out FILE\n");
    return 2;
  }
  if (!values.dataset || !values.backbone || !values.out) {
    process.stderr.write("error: --dataset, --backbone and --out are required\n");
    return 2;
  }
  let classes: number[] | null = null;
  if (values.classes !== undefined) {
    try {
      classes = values.classes.split(",").map((tok) => {
        const n = Number(tok);
        if (!Number.isInteger(n) || n < 0) {
          throw new Error(`bad class id ${JSON.stringify(tok)}`);
        }
        return n;
      });
    } catch (err) {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 2;
    }
  }
  try {
    const { count, dim } = runJob({
      dataset: values.dataset,
      backbone: values.backbone,
      split: values.split as Split,
      classes,
      out: values.out,
    });
    process.stderr.write(`wrote ${count} records of dim ${dim} to ${values.out}\n`);
    process.stdout.write(`${values.out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
