/**
 * Text-tower calibration for the fixture checkpoint.
 *
 * A randomly initialized checkpoint has no notion of audio quality: prompts
 * like "clean" and "noisy" land in arbitrary directions, so scores do not
 * track degradation. This module gives the fixture that notion with a tiny
 * deterministic fit. It synthesizes tone clips, embeds them clean and with
 * additive noise at several levels through the checkpoint's own audio tower,
 * forms a clean and a noisy prototype embedding, and then solves for the
 * minimum-norm update to the random text projection that sends a small
 * vocabulary of quality phrases onto those prototypes: positive phrases to
 * the clean side, negative phrases to the noisy side.
 *
 * Anchor phrases are fit exactly (up to float32 storage); all other text
 * keeps a scaled remnant of the random projection plus whatever leaks
 * through shared character n-grams, so arbitrary prompts still embed to
 * usable, non-degenerate directions.
 */

import { Checkpoint } from "./checkpoint.js";
import { ExportError } from "./errors.js";
import { windowSamples } from "./mel.js";
import { gaussians } from "./rng.js";
import { audioEmbedding, normalizeVector, textFeatures } from "./towers.js";

export interface CalibrationSpec {
  /** phrases that should land near the clean-audio prototype */
  positives: string[];
  /** phrases that should land near the noisy-audio prototype */
  negatives: string[];
  /** weight kept on the random projection for non-anchor text */
  randomBlend: number;
  /** how far anchor targets sit from the clean/noisy midpoint (0..1] */
  oppositionGain: number;
  /** pre-normalization magnitude of anchor targets */
  targetGain: number;
}

export const DEFAULT_CALIBRATION: CalibrationSpec = {
  positives: [
    "the sound is clear and clean",
    "the sound quality is good",
    "clean audio",
    "clear sound",
    "high quality audio",
    "the recording sounds crisp",
    "pristine studio quality",
    "smooth and natural playback",
  ],
  negatives: [
    "the sound is noisy and with artifacts",
    "the sound quality is bad",
    "noisy audio",
    "distorted sound",
    "low quality audio",
    "the recording sounds harsh",
    "static and hiss in the background",
    "muffled and broken playback",
  ],
  randomBlend: 0.25,
  oppositionGain: 1.0,
  targetGain: 0.5,
};

/** Two-tone test clip; frequency grid and phases vary with the clip index. */
function toneMix(nSamples: number, sampleRateHz: number, k: number): Float64Array {
  const w0 = (2 * Math.PI * (130 + 53 * k)) / sampleRateHz;
  const w1 = (2 * Math.PI * (1040 + 37 * k)) / sampleRateHz;
  const x = new Float64Array(nSamples);
  for (let i = 0; i < nSamples; i++) {
    x[i] = 0.27 * Math.sin(w0 * i + 0.3 * k) + 0.09 * Math.sin(w1 * i + 1.1 + 0.2 * k);
  }
  return x;
}

function accumulate(sum: Float64Array, v: Float64Array): void {
  for (let i = 0; i < sum.length; i++) sum[i] += v[i];
}

/** Mean audio embeddings of clean tone clips and their noised versions. */
export function audioPrototypes(
  ckpt: Checkpoint,
  noiseSeed: bigint
): { clean: Float64Array; noisy: Float64Array } {
  const n = windowSamples(ckpt.audioFrontend);
  const ws = ckpt.audioFrontend.window_seconds;
  const nClips = 10;
  const sigmas = [0.03, 0.07, 0.12, 0.18, 0.26];
  const noise = gaussians(noiseSeed, nClips * sigmas.length * n);

  const sumClean = new Float64Array(ckpt.dim);
  const sumNoisy = new Float64Array(ckpt.dim);
  let cursor = 0;
  for (let k = 0; k < nClips; k++) {
    const clip = toneMix(n, ckpt.audioFrontend.sample_rate_hz, k);
    accumulate(sumClean, audioEmbedding(ckpt, clip, ws));
    for (const sigma of sigmas) {
      const noisy = new Float64Array(n);
      for (let i = 0; i < n; i++) {
        noisy[i] = Math.max(-1, Math.min(1, clip[i] + sigma * noise[cursor + i]));
      }
      cursor += n;
      accumulate(sumNoisy, audioEmbedding(ckpt, noisy, ws));
    }
  }
  return { clean: normalizeVector(sumClean), noisy: normalizeVector(sumNoisy) };
}

/**
 * Solve A X = B by Gaussian elimination with partial pivoting.
 * a is n x n row-major, rhs is n x m row-major; both are consumed.
 */
function solveLinear(a: Float64Array, rhs: Float64Array, n: number, m: number): Float64Array {
  for (let col = 0; col < n; col++) {
    let best = col;
    for (let r = col + 1; r < n; r++) {
      if (Math.abs(a[r * n + col]) > Math.abs(a[best * n + col])) best = r;
    }
    if (Math.abs(a[best * n + col]) < 1e-12) {
      throw new ExportError("calibration anchors are linearly dependent");
    }
    if (best !== col) {
      for (let c = 0; c < n; c++) {
        const tmp = a[col * n + c];
        a[col * n + c] = a[best * n + c];
        a[best * n + c] = tmp;
      }
      for (let c = 0; c < m; c++) {
        const tmp = rhs[col * m + c];
        rhs[col * m + c] = rhs[best * m + c];
        rhs[best * m + c] = tmp;
      }
    }
    const piv = a[col * n + col];
    for (let r = col + 1; r < n; r++) {
      const factor = a[r * n + col] / piv;
      if (factor === 0) continue;
      for (let c = col; c < n; c++) a[r * n + c] -= factor * a[col * n + c];
      for (let c = 0; c < m; c++) rhs[r * m + c] -= factor * rhs[col * m + c];
    }
  }
  for (let col = n - 1; col >= 0; col--) {
    const piv = a[col * n + col];
    for (let c = 0; c < m; c++) {
      let v = rhs[col * m + c];
      for (let k = col + 1; k < n; k++) v -= a[col * n + k] * rhs[k * m + c];
      rhs[col * m + c] = v / piv;
    }
  }
  return rhs;
}

/**
 * Returns a replacement float32 text.w. The input checkpoint's text.w is the
 * random projection the blend retains; text.b is honored so anchor
 * embeddings come out exactly on their targets after the bias is added.
 */
export function calibrateTextProjection(
  ckpt: Checkpoint,
  spec: CalibrationSpec,
  noiseSeed: bigint
): Float32Array {
  const dim = ckpt.dim;
  const nBuckets = ckpt.textTower.n_buckets;
  const proto = audioPrototypes(ckpt, noiseSeed);

  const mid = new Float64Array(dim);
  const half = new Float64Array(dim);
  for (let d = 0; d < dim; d++) {
    mid[d] = (proto.clean[d] + proto.noisy[d]) / 2;
    half[d] = (proto.clean[d] - proto.noisy[d]) / 2;
  }
  const g = spec.oppositionGain;
  const targetFor = (sign: number): Float64Array => {
    const t = new Float64Array(dim);
    for (let d = 0; d < dim; d++) t[d] = mid[d] + sign * g * half[d];
    return normalizeVector(t);
  };
  const targetPos = targetFor(+1);
  const targetNeg = targetFor(-1);

  const anchors = [...spec.positives, ...spec.negatives];
  const nA = anchors.length;
  const phi = anchors.map((text) => textFeatures(ckpt, text));
  const bias = ckpt.tensors.get("text.b")!.f64;
  const random = ckpt.tensors.get("text.w")!.f64;
  const alpha = spec.randomBlend;

  // rhs = Y - alpha * Phi R, with Y rows m * target - bias
  const rhs = new Float64Array(nA * dim);
  for (let i = 0; i < nA; i++) {
    const target = i < spec.positives.length ? targetPos : targetNeg;
    for (let d = 0; d < dim; d++) {
      rhs[i * dim + d] = spec.targetGain * target[d] - bias[d];
    }
    const x = phi[i];
    for (let j = 0; j < nBuckets; j++) {
      const xj = x[j];
      if (xj === 0) continue;
      const row = j * dim;
      for (let d = 0; d < dim; d++) rhs[i * dim + d] -= alpha * xj * random[row + d];
    }
  }

  // Gram matrix of the anchor features
  const gram = new Float64Array(nA * nA);
  for (let i = 0; i < nA; i++) {
    for (let j = i; j < nA; j++) {
      let dot = 0;
      for (let k = 0; k < nBuckets; k++) dot += phi[i][k] * phi[j][k];
      gram[i * nA + j] = dot;
      gram[j * nA + i] = dot;
    }
  }

  const coeff = solveLinear(gram, rhs, nA, dim); // nA x dim
  const w = Float64Array.from(random, (v) => alpha * v);
  for (let i = 0; i < nA; i++) {
    const x = phi[i];
    for (let j = 0; j < nBuckets; j++) {
      const xj = x[j];
      if (xj === 0) continue;
      const row = j * dim;
      for (let d = 0; d < dim; d++) w[row + d] += xj * coeff[i * dim + d];
    }
  }
  return Float32Array.from(w, (v) => Math.fround(v));
}
