import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { beforeAll, describe, expect, test } from "vitest";

import { loadCheckpoint } from "../src/checkpoint.js";
import { makeFixtureCheckpoint } from "../src/fixture.js";
import { makeTempDir, removeDir } from "./helpers.js";

let root: string;

beforeAll(() => {
  root = makeTempDir();
  return () => removeDir(root);
});

describe("fixture checkpoint", () => {
  test("same seed writes identical bytes, different seed differs", () => {
    const a = makeFixtureCheckpoint(join(root, "a"), { seed: 5n });
    const b = makeFixtureCheckpoint(join(root, "b"), { seed: 5n });
    const c = makeFixtureCheckpoint(join(root, "c"), { seed: 6n });
    for (const name of ["checkpoint.json", "weights.bin"]) {
      expect(readFileSync(join(a, name)).equals(readFileSync(join(b, name)))).toBe(true);
    }
    expect(readFileSync(join(a, "weights.bin")).equals(readFileSync(join(c, "weights.bin")))).toBe(
      false
    );
  });

  test("loads with the documented architecture", () => {
    const ckpt = loadCheckpoint(makeFixtureCheckpoint(join(root, "arch"), { calibrateText: false }));
    expect(ckpt.checkpointId).toBe("clap-tiny-fixture");
    expect(ckpt.dim).toBe(32);
    expect(ckpt.logitScaleLog).toBeCloseTo(Math.log(33.37), 12);
    expect(ckpt.audioFrontend).toEqual({
      sample_rate_hz: 16000,
      n_mels: 32,
      n_fft: 512,
      hop_length: 256,
      window_seconds: 2.0,
      log_floor: Math.log(1e-10),
    });
    expect(ckpt.tensors.get("audio.w1")!.shape).toEqual([32, 64]);
    expect(ckpt.tensors.get("text.w")!.shape).toEqual([1024, 32]);
    expect(ckpt.sourceHash).toMatch(/^[0-9a-f]{64}$/);
  });

  test("sourceHash is stable across loads and tracks the weights", () => {
    const dirA = makeFixtureCheckpoint(join(root, "h1"), { seed: 9n, calibrateText: false });
    const dirB = makeFixtureCheckpoint(join(root, "h2"), { seed: 10n, calibrateText: false });
    expect(loadCheckpoint(dirA).sourceHash).toBe(loadCheckpoint(dirA).sourceHash);
    expect(loadCheckpoint(dirA).sourceHash).not.toBe(loadCheckpoint(dirB).sourceHash);
  });

  test("logit scale can be absent", () => {
    const ckpt = loadCheckpoint(makeFixtureCheckpoint(join(root, "noscale"), { logitScale: null, calibrateText: false }));
    expect(ckpt.logitScaleLog).toBeNull();
  });
});

describe("load failures", () => {
  test("missing files", () => {
    expect(() => loadCheckpoint(join(root, "nowhere"))).toThrow("no checkpoint.json");
  });

  test("tampered weights fail the checksum", () => {
    const dir = makeFixtureCheckpoint(join(root, "tamper"), { calibrateText: false });
    const weights = readFileSync(join(dir, "weights.bin"));
    weights[100] ^= 0xff;
    writeFileSync(join(dir, "weights.bin"), weights);
    expect(() => loadCheckpoint(dir)).toThrow("checksum mismatch for weights.bin");
  });

  test("unsupported format version", () => {
    const dir = makeFixtureCheckpoint(join(root, "version"), { calibrateText: false });
    const manifest = JSON.parse(readFileSync(join(dir, "checkpoint.json"), "utf-8"));
    manifest.format_version = 99;
    writeFileSync(join(dir, "checkpoint.json"), JSON.stringify(manifest));
    expect(() => loadCheckpoint(dir)).toThrow("unsupported format_version 99");
  });

  test("wrong tensor shape is caught", () => {
    const dir = makeFixtureCheckpoint(join(root, "shape"), { calibrateText: false });
    const manifest = JSON.parse(readFileSync(join(dir, "checkpoint.json"), "utf-8"));
    manifest.tensors["audio.b2"].shape = [16];
    writeFileSync(join(dir, "checkpoint.json"), JSON.stringify(manifest));
    expect(() => loadCheckpoint(dir)).toThrow("expected [32]");
  });

  test("tensor past the end of weights.bin is caught", () => {
    const dir = makeFixtureCheckpoint(join(root, "offsets"), { calibrateText: false });
    const manifest = JSON.parse(readFileSync(join(dir, "checkpoint.json"), "utf-8"));
    manifest.tensors["text.b"].offset += 1 << 20;
    writeFileSync(join(dir, "checkpoint.json"), JSON.stringify(manifest));
    expect(() => loadCheckpoint(dir)).toThrow("past weights.bin");
  });
});
