/**
 * Bundle export: convert a checkpoint into the portable prompt-bundle layout
 * the scoring package consumes.
 *
 * Output directory:
 *   bundle.json     manifest (format_version 1, model_id, dim, logit_scale,
 *                   audio_config, encoder_model, sha256 checksums)
 *   prompts.json    {"prompts": [{id, text, role}, ...]}
 *   embeddings.bin  float32 LE unit rows, one per prompt
 *   model.onnx      audio encoder at a fixed input shape (optional)
 *
 * Both towers are verified before anything is written: bundled text rows
 * against the native text tower, and the serialized encoder graph against
 * the native audio tower on a deterministic parity clip. A mismatch aborts
 * the export instead of shipping a bundle that disagrees with its source.
 */

import { createHash } from "node:crypto";
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { Checkpoint, loadCheckpoint } from "./checkpoint.js";
import { ExportError } from "./errors.js";
import { logMelFrames, windowSamples } from "./mel.js";
import {
  modelBytes,
  nodeBytes,
  parseModel,
  runModel,
  tensor,
  tensorF32,
  tensorI64,
  valueInfoBytes,
} from "./onnx.js";
import { canonicalJsonBytes, pyFloat, JsonValue } from "./pyjson.js";
import { audioEmbedding, cosineSimilarity, textEmbedding } from "./towers.js";

export const PARITY_THRESHOLD = 0.999;
export const BUNDLE_FORMAT_VERSION = 1;
export const ENCODER_FILE = "model.onnx";

export interface PromptSpec {
  id: string;
  text: string;
  role: "high" | "low";
}

export const DEFAULT_PROMPTS: PromptSpec[] = [
  { id: "h1", text: "the sound is clear and clean", role: "high" },
  { id: "b1", text: "the sound is noisy and with artifacts", role: "low" },
  { id: "h2", text: "the sound quality is good", role: "high" },
  { id: "b2", text: "the sound quality is bad", role: "low" },
];

export interface ExportConfig {
  /** directory holding checkpoint.json + weights.bin */
  checkpointDir: string;
  outputDir: string;
  prompts?: PromptSpec[];
  /** bundle analysis window; defaults to the checkpoint's native window */
  windowSeconds?: number;
  includeEncoder?: boolean;
}

export interface ExportStats {
  outputDir: string;
  modelId: string;
  dim: number;
  nPrompts: number;
  tau: number | null;
  windowSeconds: number;
  /** encoder input frames per window */
  nFrames: number;
  /** worst cosine between a bundled float32 row and the native text tower */
  textParityMin: number;
  /** cosine between serialized graph and native audio tower; null if no encoder */
  encoderParity: number | null;
}

function sha256Hex(data: Buffer): string {
  return createHash("sha256").update(data).digest("hex");
}

export function validatePrompts(prompts: PromptSpec[]): void {
  if (!prompts.length) {
    throw new ExportError("prompt list is empty");
  }
  const seen = new Set<string>();
  const roles = new Set<string>();
  for (const p of prompts) {
    if (!p.id) throw new ExportError("prompt id must be non-empty");
    if (seen.has(p.id)) throw new ExportError(`duplicate prompt id '${p.id}'`);
    seen.add(p.id);
    if (p.role !== "high" && p.role !== "low") {
      throw new ExportError(`prompt '${p.id}' has unknown role '${p.role}'`);
    }
    roles.add(p.role);
  }
  if (!roles.has("high") || !roles.has("low")) {
    throw new ExportError("prompts must cover both the high and the low role");
  }
}

/** Deterministic three-tone clip used for the export-time parity check. */
export function parityClip(nSamples: number): Float64Array {
  const x = new Float64Array(nSamples);
  const twoPi = 2.0 * Math.PI;
  for (let k = 0; k < nSamples; k++) {
    x[k] =
      0.42 * Math.sin(twoPi * 0.0625 * k) +
      0.21 * Math.sin(twoPi * 0.137 * k + 0.7) +
      0.1 * Math.sin(twoPi * 0.208 * k + 2.1);
  }
  return x;
}

/**
 * Serialize the audio tower at a fixed input shape (1, T, F):
 * Reshape -> mean pool via constant MatMul -> MLP.
 */
export function buildEncoderGraph(ckpt: Checkpoint, windowSeconds: number): Buffer {
  const cfg = { ...ckpt.audioFrontend, window_seconds: windowSeconds };
  const T = 1 + Math.floor(windowSamples(cfg) / cfg.hop_length);
  const F = cfg.n_mels;
  const H = ckpt.audioTower.hidden;
  const D = ckpt.dim;

  const pool = new Float32Array(T).fill(Math.fround(1 / T));
  const w1 = ckpt.tensors.get("audio.w1")!;
  const b1 = ckpt.tensors.get("audio.b1")!;
  const w2 = ckpt.tensors.get("audio.w2")!;
  const b2 = ckpt.tensors.get("audio.b2")!;
  const actOp = ckpt.audioTower.activation === "tanh" ? "Tanh" : "Relu";

  return modelBytes(
    [
      nodeBytes("Reshape", ["mel", "frames_shape"], ["frames"]),
      nodeBytes("MatMul", ["pool", "frames"], ["pooled"]),
      nodeBytes("MatMul", ["pooled", "w1"], ["pre1"]),
      nodeBytes("Add", ["pre1", "b1"], ["act_in"]),
      nodeBytes(actOp, ["act_in"], ["hidden"]),
      nodeBytes("MatMul", ["hidden", "w2"], ["pre2"]),
      nodeBytes("Add", ["pre2", "b2"], ["embedding"]),
    ],
    [
      tensorI64("frames_shape", [2], [T, F]),
      tensorF32("pool", [1, T], pool),
      tensorF32("w1", [F, H], w1.f32),
      tensorF32("b1", [H], b1.f32),
      tensorF32("w2", [H, D], w2.f32),
      tensorF32("b2", [D], b2.f32),
    ],
    [valueInfoBytes("mel", [1, T, F])],
    [valueInfoBytes("embedding", [1, D])]
  );
}

/** Run the serialized graph the way the consumer will: float32 mel frames in. */
function runEncoderGraph(
  encoderBytes: Buffer,
  ckpt: Checkpoint,
  windowSeconds: number,
  samples: Float64Array
): Float64Array {
  const cfg = { ...ckpt.audioFrontend, window_seconds: windowSeconds };
  const { frames, T, F } = logMelFrames(samples, cfg);
  const feed = Float64Array.from(frames, (v) => Math.fround(v));
  const model = parseModel(encoderBytes);
  const out = runModel(model, new Map([["mel", tensor([1, T, F], feed)]]));
  return Float64Array.from(out.get("embedding")!.data);
}

export function exportBundle(cfg: ExportConfig): ExportStats {
  const ckpt = loadCheckpoint(cfg.checkpointDir);
  const prompts = cfg.prompts ?? DEFAULT_PROMPTS;
  validatePrompts(prompts);

  const ws = cfg.windowSeconds ?? ckpt.audioFrontend.window_seconds;
  if (!(ws > 0)) {
    throw new ExportError(`window_seconds must be positive, got ${ws}`);
  }
  const audioConfig = { ...ckpt.audioFrontend, window_seconds: ws };
  const includeEncoder = cfg.includeEncoder ?? true;

  // text rows, native then rounded to storage precision
  const native = prompts.map((p) => textEmbedding(ckpt, p.text));
  const embBytes = Buffer.alloc(4 * prompts.length * ckpt.dim);
  let textParityMin = 1.0;
  native.forEach((row, i) => {
    const f32 = Float32Array.from(row);
    for (let d = 0; d < ckpt.dim; d++) {
      embBytes.writeFloatLE(f32[d], 4 * (i * ckpt.dim + d));
    }
    textParityMin = Math.min(textParityMin, cosineSimilarity(row, f32));
  });
  if (textParityMin < PARITY_THRESHOLD) {
    throw new ExportError(
      `export graph mismatch: text embedding parity ${textParityMin.toFixed(6)} below ${PARITY_THRESHOLD}`
    );
  }

  // encoder graph, verified against the native tower before it is shipped
  let encoderBytes: Buffer | null = null;
  let encoderParity: number | null = null;
  const nFrames = 1 + Math.floor(windowSamples(audioConfig) / audioConfig.hop_length);
  if (includeEncoder) {
    encoderBytes = buildEncoderGraph(ckpt, ws);
    const clip = parityClip(windowSamples(audioConfig));
    const nativeEmb = audioEmbedding(ckpt, clip, ws);
    const graphEmb = runEncoderGraph(encoderBytes, ckpt, ws, clip);
    encoderParity = cosineSimilarity(nativeEmb, graphEmb);
    if (encoderParity < PARITY_THRESHOLD) {
      throw new ExportError(
        `export graph mismatch: encoder parity ${encoderParity.toFixed(6)} below ${PARITY_THRESHOLD}`
      );
    }
  }

  const promptsBytes = canonicalJsonBytes({
    prompts: prompts.map((p) => ({ id: p.id, text: p.text, role: p.role })),
  });

  const tau = ckpt.logitScaleLog === null ? null : Math.exp(ckpt.logitScaleLog);
  const modelId = `${ckpt.checkpointId}@sha256:${ckpt.sourceHash}`;

  const checksums: { [name: string]: JsonValue } = {
    "prompts.json": sha256Hex(promptsBytes),
    "embeddings.bin": sha256Hex(embBytes),
  };
  if (encoderBytes !== null) {
    checksums[ENCODER_FILE] = sha256Hex(encoderBytes);
  }

  const manifest: JsonValue = {
    format_version: BUNDLE_FORMAT_VERSION,
    model_id: modelId,
    dim: ckpt.dim,
    logit_scale: tau === null ? null : pyFloat(tau),
    audio_config: {
      sample_rate_hz: audioConfig.sample_rate_hz,
      n_mels: audioConfig.n_mels,
      n_fft: audioConfig.n_fft,
      hop_length: audioConfig.hop_length,
      window_seconds: pyFloat(audioConfig.window_seconds),
      log_floor: pyFloat(audioConfig.log_floor),
    },
    encoder_model: encoderBytes === null ? null : ENCODER_FILE,
    checksums,
  };

  mkdirSync(cfg.outputDir, { recursive: true });
  writeFileSync(join(cfg.outputDir, "bundle.json"), canonicalJsonBytes(manifest));
  writeFileSync(join(cfg.outputDir, "prompts.json"), promptsBytes);
  writeFileSync(join(cfg.outputDir, "embeddings.bin"), embBytes);
  if (encoderBytes !== null) {
    writeFileSync(join(cfg.outputDir, ENCODER_FILE), encoderBytes);
  }

  return {
    outputDir: cfg.outputDir,
    modelId,
    dim: ckpt.dim,
    nPrompts: prompts.length,
    tau,
    windowSeconds: ws,
    nFrames,
    textParityMin,
    encoderParity,
  };
}
