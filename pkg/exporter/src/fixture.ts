/**
 * Deterministic fixture checkpoint. Stands in for a downloaded contrastive
 * checkpoint in tests and offline runs: small real weights, a learned logit
 * scale, and the same on-disk contract a converted hub snapshot would have.
 *
 * By default the text projection is calibrated against the audio tower (see
 * calibrate.ts) so the fixture behaves like a miniature trained model:
 * quality-describing prompts track additive noise instead of pointing in
 * random directions.
 */

import { calibrateTextProjection, DEFAULT_CALIBRATION } from "./calibrate.js";
import { Checkpoint, CheckpointSource, NamedTensor, saveCheckpoint } from "./checkpoint.js";
import { LOG_FLOOR_DEFAULT } from "./mel.js";
import { gaussians } from "./rng.js";

export interface FixtureOptions {
  checkpointId?: string;
  seed?: bigint;
  dim?: number;
  hidden?: number;
  nBuckets?: number;
  ngram?: number;
  sampleRateHz?: number;
  nMels?: number;
  nFft?: number;
  hopLength?: number;
  windowSeconds?: number;
  /** temperature tau; stored in the checkpoint as log(tau). null omits it */
  logitScale?: number | null;
  /** fit quality phrases to clean/noisy audio prototypes (default true) */
  calibrateText?: boolean;
}

function named(shape: number[], f32: Float32Array): NamedTensor {
  return { shape, f32, f64: Float64Array.from(f32) };
}

export function makeFixtureCheckpoint(dir: string, opts: FixtureOptions = {}): string {
  const dim = opts.dim ?? 32;
  const hidden = opts.hidden ?? 64;
  const nBuckets = opts.nBuckets ?? 1024;
  const ngram = opts.ngram ?? 3;
  const nMels = opts.nMels ?? 32;
  const seed = opts.seed ?? 1234n;
  const logitScale = opts.logitScale === undefined ? 33.37 : opts.logitScale;

  // one gaussian stream, consumed in fixed tensor order
  const counts = [nMels * hidden, hidden, hidden * dim, dim, nBuckets * dim, dim];
  const total = counts.reduce((a, b) => a + b, 0);
  const stream = gaussians(seed, total);
  let cursor = 0;
  const take = (n: number, scale: number): Float32Array => {
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) out[i] = Math.fround(stream[cursor + i] * scale);
    cursor += n;
    return out;
  };

  const tensors = new Map<string, NamedTensor>([
    ["audio.w1", named([nMels, hidden], take(nMels * hidden, 1 / Math.sqrt(nMels)))],
    ["audio.b1", named([hidden], take(hidden, 0.01))],
    ["audio.w2", named([hidden, dim], take(hidden * dim, 1 / Math.sqrt(hidden)))],
    ["audio.b2", named([dim], take(dim, 0.01))],
    ["text.w", named([nBuckets, dim], take(nBuckets * dim, 1 / Math.sqrt(nBuckets)))],
    ["text.b", named([dim], take(dim, 0.01))],
  ]);

  const ckpt: Checkpoint = {
    checkpointId: opts.checkpointId ?? "clap-tiny-fixture",
    dim,
    logitScaleLog: logitScale === null ? null : Math.log(logitScale),
    audioFrontend: {
      sample_rate_hz: opts.sampleRateHz ?? 16000,
      n_mels: nMels,
      n_fft: opts.nFft ?? 512,
      hop_length: opts.hopLength ?? 256,
      window_seconds: opts.windowSeconds ?? 2.0,
      log_floor: LOG_FLOOR_DEFAULT,
    },
    audioTower: { pooling: "mean", hidden, activation: "tanh" },
    textTower: { kind: "char_ngram_hash", ngram, n_buckets: nBuckets },
    tensors,
    sourceHash: "",
  };

  if (opts.calibrateText ?? true) {
    const noiseSeed = seed ^ 0x517cc1b727220a95n;
    const w = calibrateTextProjection(ckpt, DEFAULT_CALIBRATION, noiseSeed);
    tensors.set("text.w", named([nBuckets, dim], w));
  }

  const src: CheckpointSource = {
    checkpointId: ckpt.checkpointId,
    dim,
    logitScaleLog: ckpt.logitScaleLog,
    audioFrontend: ckpt.audioFrontend,
    audioTower: ckpt.audioTower,
    textTower: ckpt.textTower,
    tensors,
  };
  return saveCheckpoint(dir, src);
}
