#!/usr/bin/env node
/**
 * pamkit-export --checkpoint <dir> --out <dir> [--prompts <file>]
 *               [--window-seconds <s>] [--no-encoder]
 *
 * Converts a checkpoint directory into a prompt bundle and prints the
 * parity stats measured during conversion. Exit code 0 on success, 1 on
 * any failure.
 */

import { readFileSync } from "node:fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { ExportError } from "./errors.js";
import { exportBundle, DEFAULT_PROMPTS, PromptSpec } from "./export.js";

function loadPromptsFile(path: string): PromptSpec[] {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, "utf-8"));
  } catch (e) {
    throw new ExportError(`cannot read prompts file ${path}: ${e}`);
  }
  const obj = parsed as { prompts?: unknown };
  if (!obj || !Array.isArray(obj.prompts)) {
    throw new ExportError(`prompts file ${path} must be {"prompts": [{id, text, role}, ...]}`);
  }
  return obj.prompts.map((entry) => {
    const p = entry as Record<string, unknown>;
    return { id: String(p.id ?? ""), text: String(p.text ?? ""), role: p.role as PromptSpec["role"] };
  });
}

const argv = yargs(hideBin(process.argv))
  .scriptName("pamkit-export")
  .usage("$0 --checkpoint <dir> --out <dir> [options]")
  .option("checkpoint", {
    type: "string",
    demandOption: true,
    describe: "checkpoint directory (checkpoint.json + weights.bin)",
  })
  .option("out", {
    type: "string",
    demandOption: true,
    describe: "bundle directory to write",
  })
  .option("prompts", {
    type: "string",
    describe: "prompts JSON file; omit for the built-in 4-prompt set",
  })
  .option("window-seconds", {
    type: "number",
    describe: "analysis window override; default: the checkpoint's native window",
  })
  .option("encoder", {
    type: "boolean",
    default: true,
    describe: "include the exported audio encoder (--no-encoder to skip)",
  })
  .strict()
  .help()
  .parseSync();

try {
  const prompts = argv.prompts ? loadPromptsFile(argv.prompts) : DEFAULT_PROMPTS;
  const stats = exportBundle({
    checkpointDir: argv.checkpoint,
    outputDir: argv.out,
    prompts,
    windowSeconds: argv.windowSeconds,
    includeEncoder: argv.encoder,
  });

  console.log(`model_id: ${stats.modelId}`);
  console.log(`prompts: ${stats.nPrompts} rows, dim ${stats.dim}`);
  console.log(`tau: ${stats.tau === null ? "none recorded" : stats.tau}`);
  console.log(`window: ${stats.windowSeconds} s (${stats.nFrames} frames per window)`);
  console.log(`text parity (min cosine vs native tower): ${stats.textParityMin.toFixed(9)}`);
  if (stats.encoderParity === null) {
    console.log("encoder: not included");
  } else {
    console.log(`encoder parity (cosine vs native tower): ${stats.encoderParity.toFixed(9)}`);
  }
  console.log(`bundle written to ${stats.outputDir}`);
} catch (e) {
  if (e instanceof ExportError) {
    console.error(`error: ${e.message}`);
  } else {
    console.error(`error: ${e instanceof Error ? e.stack ?? e.message : e}`);
  }
  process.exitCode = 1;
}
