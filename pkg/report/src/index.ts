#!/usr/bin/env node
// CLI: report --in <dir> --out <dir>

import { SchemaError } from "./schema";
import { writeReport } from "./report";

function parseArgs(argv: string[]): { inDir: string; outDir: string } {
  let inDir: string | undefined;
  let outDir: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--in") inDir = argv[++i];
    else if (argv[i] === "--out") outDir = argv[++i];
    else {
      throw new Error(`unknown argument ${argv[i]} (usage: report --in <dir> --out <dir>)`);
    }
  }
  if (!inDir || !outDir) {
    throw new Error("usage: report --in <dir> --out <dir>");
  }
  return { inDir, outDir };
}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error((e as Error).message);
    return 2;
  }
  try {
    const result = writeReport(args.inDir, args.outDir);
    for (const w of result.warnings) console.warn(`warning: ${w}`);
    console.log(
      `report: wrote ${result.files.length} file(s) to ${args.outDir} ` +
        `(${result.files.map((f) => f.name).join(", ")})`
    );
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${(e as Error).message}`);
      return 2;
    }
    console.error((e as Error).message);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
