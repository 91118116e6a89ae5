#!/usr/bin/env node
/**
 * Write a deterministic fixture checkpoint:
 *   npm run fixture -- <dir> [--seed <n>]
 *
 * Gives offline environments something to feed pamkit-export without
 * downloading a real checkpoint.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { makeFixtureCheckpoint } from "./fixture.js";

const argv = yargs(hideBin(process.argv))
  .scriptName("pamkit-export-fixture")
  .usage("$0 <dir> [--seed <n>]")
  .command("$0 <dir>", "write a fixture checkpoint", (y) =>
    y.positional("dir", { type: "string", demandOption: true })
  )
  .option("seed", { type: "number", default: 1234 })
  .strict()
  .help()
  .parseSync();

try {
  const dir = makeFixtureCheckpoint(argv.dir as string, { seed: BigInt(argv.seed) });
  console.log(`fixture checkpoint written to ${dir}`);
} catch (e) {
  console.error(`error: ${e instanceof Error ? e.message : e}`);
  process.exitCode = 1;
}
