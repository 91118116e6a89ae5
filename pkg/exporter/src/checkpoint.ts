/**
 * Self-contained checkpoint container for contrastive audio-text models.
 *
 * Layout on disk:
 *   checkpoint.json   architecture, mel front-end, learned logit scale,
 *                     tensor table (byte offsets into weights.bin), weights
 *                     checksum
 *   weights.bin       float32 little-endian tensors, concatenated
 *
 * This plays the role a downloaded hub checkpoint would play in a networked
 * deployment; loading is strict so a truncated or tampered download fails
 * loudly instead of exporting garbage.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync, mkdirSync, existsSync } from "node:fs";
import { join } from "node:path";

import { ExportError } from "./errors.js";
import { AudioConfigJson, validateAudioConfig } from "./mel.js";
import { canonicalJsonBytes, pyFloat, JsonValue } from "./pyjson.js";

export const CHECKPOINT_FORMAT_VERSION = 1;

export interface AudioTowerSpec {
  pooling: "mean";
  hidden: number;
  activation: "tanh" | "relu";
}

export interface TextTowerSpec {
  kind: "char_ngram_hash";
  ngram: number;
  n_buckets: number;
}

export interface NamedTensor {
  shape: number[];
  /** float32 storage as read from weights.bin */
  f32: Float32Array;
  /** widened copy used by the native float64 forward passes */
  f64: Float64Array;
}

export interface Checkpoint {
  checkpointId: string;
  dim: number;
  /** learned log logit scale; tau = exp(logitScaleLog). null if absent */
  logitScaleLog: number | null;
  audioFrontend: AudioConfigJson;
  audioTower: AudioTowerSpec;
  textTower: TextTowerSpec;
  tensors: Map<string, NamedTensor>;
  /** sha256 over checkpoint.json followed by weights.bin */
  sourceHash: string;
}

function sha256Hex(...parts: Buffer[]): string {
  const h = createHash("sha256");
  for (const p of parts) h.update(p);
  return h.digest("hex");
}

export function tensorSize(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export interface CheckpointSource {
  checkpointId: string;
  dim: number;
  logitScaleLog: number | null;
  audioFrontend: AudioConfigJson;
  audioTower: AudioTowerSpec;
  textTower: TextTowerSpec;
  tensors: Map<string, { shape: number[]; f32: Float32Array }>;
}

/** Write checkpoint.json + weights.bin; returns the directory. */
export function saveCheckpoint(dir: string, src: CheckpointSource): string {
  mkdirSync(dir, { recursive: true });

  const names = [...src.tensors.keys()].sort();
  const table: { [name: string]: JsonValue } = {};
  const blobs: Buffer[] = [];
  let offset = 0;
  for (const name of names) {
    const t = src.tensors.get(name)!;
    if (t.f32.length !== tensorSize(t.shape)) {
      throw new ExportError(`tensor ${name}: ${t.f32.length} values, shape says ${tensorSize(t.shape)}`);
    }
    const bytes = Buffer.from(t.f32.buffer, t.f32.byteOffset, t.f32.byteLength);
    table[name] = { offset, shape: t.shape };
    blobs.push(Buffer.from(bytes));
    offset += bytes.length;
  }
  const weights = Buffer.concat(blobs);

  const manifest: JsonValue = {
    format_version: CHECKPOINT_FORMAT_VERSION,
    checkpoint_id: src.checkpointId,
    dim: src.dim,
    logit_scale_log: src.logitScaleLog === null ? null : pyFloat(src.logitScaleLog),
    audio_frontend: {
      sample_rate_hz: src.audioFrontend.sample_rate_hz,
      n_mels: src.audioFrontend.n_mels,
      n_fft: src.audioFrontend.n_fft,
      hop_length: src.audioFrontend.hop_length,
      window_seconds: pyFloat(src.audioFrontend.window_seconds),
      log_floor: pyFloat(src.audioFrontend.log_floor),
    },
    audio_tower: {
      pooling: src.audioTower.pooling,
      hidden: src.audioTower.hidden,
      activation: src.audioTower.activation,
    },
    text_tower: {
      kind: src.textTower.kind,
      ngram: src.textTower.ngram,
      n_buckets: src.textTower.n_buckets,
    },
    tensors: table,
    weights_sha256: sha256Hex(weights),
  };

  writeFileSync(join(dir, "checkpoint.json"), canonicalJsonBytes(manifest));
  writeFileSync(join(dir, "weights.bin"), weights);
  return dir;
}

function requireKey(obj: Record<string, unknown>, key: string): unknown {
  if (!(key in obj)) {
    throw new ExportError(`checkpoint load failure: checkpoint.json missing key '${key}'`);
  }
  return obj[key];
}

export function loadCheckpoint(dir: string): Checkpoint {
  const manifestPath = join(dir, "checkpoint.json");
  const weightsPath = join(dir, "weights.bin");
  if (!existsSync(manifestPath)) {
    throw new ExportError(`checkpoint load failure: no checkpoint.json in ${dir}`);
  }
  if (!existsSync(weightsPath)) {
    throw new ExportError(`checkpoint load failure: no weights.bin in ${dir}`);
  }
  const manifestBytes = readFileSync(manifestPath);
  const weights = readFileSync(weightsPath);

  let manifest: Record<string, unknown>;
  try {
    manifest = JSON.parse(manifestBytes.toString("utf-8"));
  } catch (e) {
    throw new ExportError(`checkpoint load failure: checkpoint.json is not valid JSON: ${e}`);
  }

  const version = requireKey(manifest, "format_version");
  if (version !== CHECKPOINT_FORMAT_VERSION) {
    throw new ExportError(
      `checkpoint load failure: unsupported format_version ${version}, expected ${CHECKPOINT_FORMAT_VERSION}`
    );
  }

  const recorded = requireKey(manifest, "weights_sha256");
  if (sha256Hex(weights) !== recorded) {
    throw new ExportError("checkpoint load failure: checksum mismatch for weights.bin");
  }

  const frontend = requireKey(manifest, "audio_frontend") as AudioConfigJson;
  try {
    validateAudioConfig(frontend);
  } catch (e) {
    throw new ExportError(`checkpoint load failure: ${(e as Error).message}`);
  }

  const audioTower = requireKey(manifest, "audio_tower") as AudioTowerSpec;
  if (audioTower.pooling !== "mean" || !["tanh", "relu"].includes(audioTower.activation)) {
    throw new ExportError("checkpoint load failure: unsupported audio tower architecture");
  }
  const textTower = requireKey(manifest, "text_tower") as TextTowerSpec;
  if (textTower.kind !== "char_ngram_hash" || textTower.ngram < 1 || textTower.n_buckets < 1) {
    throw new ExportError("checkpoint load failure: unsupported text tower architecture");
  }

  const dim = Number(requireKey(manifest, "dim"));
  const rawScale = requireKey(manifest, "logit_scale_log");
  const logitScaleLog = rawScale === null ? null : Number(rawScale);

  const table = requireKey(manifest, "tensors") as Record<string, { offset: number; shape: number[] }>;
  const tensors = new Map<string, NamedTensor>();
  for (const [name, spec] of Object.entries(table)) {
    const count = tensorSize(spec.shape);
    const end = spec.offset + 4 * count;
    if (spec.offset < 0 || end > weights.length) {
      throw new ExportError(`checkpoint load failure: tensor ${name} extends past weights.bin`);
    }
    const f32 = new Float32Array(
      weights.buffer.slice(weights.byteOffset + spec.offset, weights.byteOffset + end)
    );
    tensors.set(name, { shape: [...spec.shape], f32, f64: Float64Array.from(f32) });
  }

  const ckpt: Checkpoint = {
    checkpointId: String(requireKey(manifest, "checkpoint_id")),
    dim,
    logitScaleLog,
    audioFrontend: frontend,
    audioTower,
    textTower,
    tensors,
    sourceHash: sha256Hex(manifestBytes, weights),
  };
  validateShapes(ckpt);
  return ckpt;
}

function expectShape(ckpt: Checkpoint, name: string, shape: number[]): void {
  const t = ckpt.tensors.get(name);
  if (!t) {
    throw new ExportError(`checkpoint load failure: missing tensor ${name}`);
  }
  if (t.shape.join(",") !== shape.join(",")) {
    throw new ExportError(
      `checkpoint load failure: tensor ${name} has shape [${t.shape}], expected [${shape}]`
    );
  }
}

function validateShapes(ckpt: Checkpoint): void {
  const F = ckpt.audioFrontend.n_mels;
  const H = ckpt.audioTower.hidden;
  const D = ckpt.dim;
  const B = ckpt.textTower.n_buckets;
  expectShape(ckpt, "audio.w1", [F, H]);
  expectShape(ckpt, "audio.b1", [H]);
  expectShape(ckpt, "audio.w2", [H, D]);
  expectShape(ckpt, "audio.b2", [D]);
  expectShape(ckpt, "text.w", [B, D]);
  expectShape(ckpt, "text.b", [D]);
}
