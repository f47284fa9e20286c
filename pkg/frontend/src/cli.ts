#!/usr/bin/env node
/** Command line: render --spec <figure-spec.json>
 *
 * Exit 0 on success; exit 1 with the reason on stderr for unknown usage,
 * invalid specs, schema mismatches, or empty inputs (no files are written
 * in any failure case).
 */

import { readFileSync } from "fs";

import { render, validateSpec } from "./render";
import { SchemaError } from "./types";

function usage(): string {
  return "usage: render --spec <figure-spec.json>";
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
    console.log(usage());
    return argv.length === 0 ? 1 : 0;
  }
  if (argv[0] !== "render") {
    console.error(`unknown command ${JSON.stringify(argv[0])}\n${usage()}`);
    return 1;
  }
  const specIdx = argv.indexOf("--spec");
  if (specIdx < 0 || specIdx + 1 >= argv.length) {
    console.error(`missing --spec <path>\n${usage()}`);
    return 1;
  }
  const extra = argv.filter((a, i) => i > 0 && i !== specIdx && i !== specIdx + 1);
  if (extra.length) {
    console.error(`unknown arguments: ${extra.join(" ")}\n${usage()}`);
    return 1;
  }
  try {
    const raw = JSON.parse(readFileSync(argv[specIdx + 1], "utf-8"));
    const result = render(validateSpec(raw));
    console.log(JSON.stringify({ svg: result.svgPath, png: result.pngPath }));
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
    } else {
      console.error(`error: ${(err as Error).message}`);
    }
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
