/**
 * Cross-language checks against the installed scoring package (pamkit).
 * These are the contract tests: the bundle this exporter writes must load
 * there with zero warnings, survive a load/save cycle byte-identically, and
 * the shipped encoder and text rows must agree with the native towers.
 *
 * The scoring package is a hard requirement here; if it is missing these
 * tests fail loudly instead of skipping.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { beforeAll, describe, expect, test } from "vitest";

import { loadCheckpoint, Checkpoint } from "../src/checkpoint.js";
import { exportBundle, parityClip, ExportStats } from "../src/export.js";
import { makeFixtureCheckpoint } from "../src/fixture.js";
import { windowSamples } from "../src/mel.js";
import { audioEmbedding, cosineSimilarity, textEmbedding } from "../src/towers.js";
import { makeTempDir, removeDir, requirePamkit, runPython } from "./helpers.js";

let root: string;
let ckptDir: string;
let ckpt: Checkpoint;
let bundleDir: string;
let stats: ExportStats;

beforeAll(() => {
  requirePamkit();
  root = makeTempDir();
  ckptDir = makeFixtureCheckpoint(join(root, "ckpt"));
  ckpt = loadCheckpoint(ckptDir);
  bundleDir = join(root, "bundle");
  stats = exportBundle({ checkpointDir: ckptDir, outputDir: bundleDir });
  return () => removeDir(root);
});

function clipBytes(nSamples: number): Buffer {
  const samples = parityClip(nSamples);
  return Buffer.from(samples.buffer, samples.byteOffset, samples.byteLength);
}

describe("bundle loading", () => {
  test("loads with zero warnings and the exported identity", () => {
    const out = runPython(
      `
import sys, json, warnings
import pamkit
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    b = pamkit.load_bundle(sys.argv[1])
print(json.dumps({
    "warnings": [str(w.message) for w in caught],
    "model_id": b.model_id,
    "dim": b.dim,
    "logit_scale": b.logit_scale,
    "encoder_model": b.encoder_model,
    "window_seconds": b.audio_config.window_seconds,
    "ids": [p.id for p in b.prompts],
    "roles": [p.role for p in b.prompts],
}))
`,
      [bundleDir]
    );
    const info = JSON.parse(out.toString("utf-8"));
    expect(info.warnings).toEqual([]);
    expect(info.model_id).toBe(stats.modelId);
    expect(info.dim).toBe(32);
    expect(info.logit_scale).toBe(33.37);
    expect(info.encoder_model).toBe("model.onnx");
    expect(info.window_seconds).toBe(2.0);
    expect(info.ids).toEqual(["h1", "b1", "h2", "b2"]);
    expect(info.roles).toEqual(["high", "low", "high", "low"]);
  });

  test("a bundle without an encoder also loads clean", () => {
    const lean = join(root, "bundle-lean");
    exportBundle({ checkpointDir: ckptDir, outputDir: lean, includeEncoder: false });
    const out = runPython(
      `
import sys, json, warnings
import pamkit
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    b = pamkit.load_bundle(sys.argv[1])
print(json.dumps({"warnings": [str(w.message) for w in caught], "encoder_model": b.encoder_model}))
`,
      [lean]
    );
    const info = JSON.parse(out.toString("utf-8"));
    expect(info.warnings).toEqual([]);
    expect(info.encoder_model).toBeNull();
  });

  test("a load/save cycle through the scoring package is byte-identical", () => {
    const out = runPython(
      `
import sys, json, hashlib, tempfile
from pathlib import Path
import pamkit
src = Path(sys.argv[1])
b = pamkit.load_bundle(src)
with tempfile.TemporaryDirectory() as td:
    dst = Path(td) / "resaved"
    pamkit.save_bundle(b, dst)
    names = sorted(p.name for p in dst.iterdir())
    same = {
        n: hashlib.sha256((src / n).read_bytes()).hexdigest()
           == hashlib.sha256((dst / n).read_bytes()).hexdigest()
        for n in names
    }
print(json.dumps({"names": names, "same": same}))
`,
      [bundleDir]
    );
    const info = JSON.parse(out.toString("utf-8"));
    expect(info.names).toEqual(["bundle.json", "embeddings.bin", "model.onnx", "prompts.json"]);
    for (const [name, same] of Object.entries(info.same)) {
      expect(same, name).toBe(true);
    }
  });
});

describe("parity against the native towers", () => {
  test("text rows the consumer sees match the native text tower (cosine >= 0.999)", () => {
    const out = runPython(
      `
import sys, json
import pamkit
b = pamkit.load_bundle(sys.argv[1])
print(json.dumps({
    "ids": [p.id for p in b.prompts],
    "texts": [p.text for p in b.prompts],
    "rows": [[float(v) for v in row] for row in b.embeddings],
}))
`,
      [bundleDir]
    );
    const info = JSON.parse(out.toString("utf-8"));
    expect(info.texts[0]).toBe("the sound is clear and clean");
    info.rows.forEach((row: number[], i: number) => {
      const native = textEmbedding(ckpt, info.texts[i]);
      const cos = cosineSimilarity(Float64Array.from(row), native);
      expect(cos, info.ids[i]).toBeGreaterThanOrEqual(0.999);
    });
  });

  test("the consumer-run encoder matches the native audio tower (cosine >= 0.999)", () => {
    const n = windowSamples(ckpt.audioFrontend);
    const out = runPython(
      `
import sys, json
import numpy as np
import pamkit
b = pamkit.load_bundle(sys.argv[1])
samples = np.frombuffer(sys.stdin.buffer.read(), dtype="<f8")
backend = pamkit.NeuralBackend(b)
emb = backend.embed(pamkit.AudioClip(samples, b.audio_config.sample_rate_hz))
print(json.dumps([float(v) for v in emb]))
`,
      [bundleDir],
      clipBytes(n)
    );
    const theirs = Float64Array.from(JSON.parse(out.toString("utf-8")) as number[]);
    expect(theirs.length).toBe(32);
    const norm = Math.sqrt(theirs.reduce((a, v) => a + v * v, 0));
    expect(Math.abs(norm - 1)).toBeLessThan(1e-9);

    const native = audioEmbedding(ckpt, parityClip(n), ckpt.audioFrontend.window_seconds);
    expect(cosineSimilarity(native, theirs)).toBeGreaterThanOrEqual(0.999);
  });

  test("a re-exported encoder agrees with itself in the consumer (cosine >= 0.9999)", () => {
    const again = join(root, "bundle-again");
    exportBundle({ checkpointDir: ckptDir, outputDir: again });
    expect(
      readFileSync(join(again, "model.onnx")).equals(readFileSync(join(bundleDir, "model.onnx")))
    ).toBe(true);

    const n = windowSamples(ckpt.audioFrontend);
    const script = `
import sys, json
import numpy as np
import pamkit
b = pamkit.load_bundle(sys.argv[1])
samples = np.frombuffer(sys.stdin.buffer.read(), dtype="<f8")
emb = pamkit.NeuralBackend(b).embed(pamkit.AudioClip(samples, b.audio_config.sample_rate_hz))
print(json.dumps([float(v) for v in emb]))
`;
    const a = JSON.parse(runPython(script, [bundleDir], clipBytes(n)).toString("utf-8"));
    const b = JSON.parse(runPython(script, [again], clipBytes(n)).toString("utf-8"));
    const cos = cosineSimilarity(Float64Array.from(a as number[]), Float64Array.from(b as number[]));
    expect(cos).toBeGreaterThanOrEqual(0.9999);
  });
});

describe("end-to-end scoring", () => {
  test("the exported bundle scores a clip with its own encoder and temperature", () => {
    const n = windowSamples(ckpt.audioFrontend);
    const out = runPython(
      `
import sys, json
import numpy as np
import pamkit
b = pamkit.load_bundle(sys.argv[1])
samples = np.frombuffer(sys.stdin.buffer.read(), dtype="<f8")
clip = pamkit.AudioClip(samples, b.audio_config.sample_rate_hz)
backend = pamkit.NeuralBackend(b)
res = pamkit.score_clip(backend, b, clip, strategy="pam", tau="bundle")
print(json.dumps({
    "pam": res.pam,
    "n_windows": len(res.per_window),
    "tau_used": res.tau_used,
    "strategy": res.strategy,
}))
`,
      [bundleDir],
      clipBytes(2 * n)
    );
    const res = JSON.parse(out.toString("utf-8"));
    expect(res.strategy).toBe("pam");
    expect(res.n_windows).toBe(2);
    expect(res.tau_used).toBeCloseTo(33.37, 10);
    expect(res.pam).toBeGreaterThanOrEqual(0);
    expect(res.pam).toBeLessThanOrEqual(1);
  });
});
