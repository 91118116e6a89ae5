/**
 * Native forward passes for the two checkpoint towers, in float64. The
 * exported graph is checked against these before a bundle is written.
 *
 * Text tower: hashed character n-gram counts -> linear projection -> L2 norm.
 * Audio tower: log-mel frames -> mean pool over time -> 2-layer MLP -> L2 norm.
 */

import { Checkpoint } from "./checkpoint.js";
import { ExportError } from "./errors.js";
import { logMelFrames } from "./mel.js";

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x00000100000001b3n;
const MASK64 = (1n << 64n) - 1n;

export function fnv1a64(bytes: Uint8Array): bigint {
  let h = FNV_OFFSET;
  for (const b of bytes) {
    h ^= BigInt(b);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

export function normalizeVector(v: Float64Array): Float64Array {
  let sq = 0.0;
  for (const x of v) sq += x * x;
  const norm = Math.sqrt(sq);
  if (norm === 0.0) {
    throw new ExportError("cannot normalize zero vector");
  }
  const out = new Float64Array(v.length);
  for (let i = 0; i < v.length; i++) out[i] = v[i] / norm;
  return out;
}

export function cosineSimilarity(a: ArrayLike<number>, b: ArrayLike<number>): number {
  if (a.length !== b.length) {
    throw new ExportError(`cosine: length mismatch ${a.length} vs ${b.length}`);
  }
  let dot = 0.0;
  let na = 0.0;
  let nb = 0.0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na === 0.0 || nb === 0.0) {
    throw new ExportError("cosine: zero vector");
  }
  return dot / Math.sqrt(na * nb);
}

/** Lowercase, collapse whitespace runs, trim. */
export function normalizeText(text: string): string {
  return text.toLowerCase().replace(/\s+/g, " ").trim();
}

const utf8 = new TextEncoder();

/** Hashed n-gram count features over " " + text + " ", L2-normalized. */
export function textFeatures(ckpt: Checkpoint, text: string): Float64Array {
  const { ngram, n_buckets: nBuckets } = ckpt.textTower;
  const norm = normalizeText(text);
  if (!norm) {
    throw new ExportError("prompt text is empty");
  }
  const padded = ` ${norm} `;
  if (padded.length < ngram) {
    throw new ExportError(`prompt text shorter than ${ngram}-gram window`);
  }
  const counts = new Float64Array(nBuckets);
  const big = BigInt(nBuckets);
  for (let i = 0; i + ngram <= padded.length; i++) {
    const bucket = Number(fnv1a64(utf8.encode(padded.slice(i, i + ngram))) % big);
    counts[bucket] += 1.0;
  }
  return normalizeVector(counts);
}

export function textEmbedding(ckpt: Checkpoint, text: string): Float64Array {
  const x = textFeatures(ckpt, text);
  const w = ckpt.tensors.get("text.w")!; // (buckets, dim)
  const b = ckpt.tensors.get("text.b")!;
  const dim = ckpt.dim;
  const out = new Float64Array(dim);
  for (let i = 0; i < x.length; i++) {
    const xi = x[i];
    if (xi === 0.0) continue; // counts are sparse; skipping exact zeros changes nothing
    const row = i * dim;
    for (let d = 0; d < dim; d++) out[d] += xi * w.f64[row + d];
  }
  for (let d = 0; d < dim; d++) out[d] += b.f64[d];
  return normalizeVector(out);
}

function activation(ckpt: Checkpoint, v: Float64Array): void {
  if (ckpt.audioTower.activation === "tanh") {
    for (let i = 0; i < v.length; i++) v[i] = Math.tanh(v[i]);
  } else {
    for (let i = 0; i < v.length; i++) v[i] = Math.max(v[i], 0);
  }
}

/**
 * Embed exactly one analysis window of audio. `windowSeconds` is the bundle
 * window, which may differ from the checkpoint's native default.
 */
export function audioEmbedding(
  ckpt: Checkpoint,
  samples: Float64Array,
  windowSeconds: number
): Float64Array {
  const cfg = { ...ckpt.audioFrontend, window_seconds: windowSeconds };
  const expected = Math.round(windowSeconds * cfg.sample_rate_hz);
  if (samples.length !== expected) {
    throw new ExportError(
      `clip must be exactly one analysis window (${expected} samples), got ${samples.length}`
    );
  }
  const { frames, T, F } = logMelFrames(samples, cfg);

  const pooled = new Float64Array(F);
  for (let t = 0; t < T; t++) {
    const row = t * F;
    for (let f = 0; f < F; f++) pooled[f] += frames[row + f];
  }
  for (let f = 0; f < F; f++) pooled[f] /= T;

  const w1 = ckpt.tensors.get("audio.w1")!; // (F, H)
  const b1 = ckpt.tensors.get("audio.b1")!;
  const w2 = ckpt.tensors.get("audio.w2")!; // (H, D)
  const b2 = ckpt.tensors.get("audio.b2")!;
  const H = ckpt.audioTower.hidden;
  const D = ckpt.dim;

  const hidden = new Float64Array(H);
  for (let f = 0; f < F; f++) {
    const pf = pooled[f];
    const row = f * H;
    for (let j = 0; j < H; j++) hidden[j] += pf * w1.f64[row + j];
  }
  for (let j = 0; j < H; j++) hidden[j] += b1.f64[j];
  activation(ckpt, hidden);

  const out = new Float64Array(D);
  for (let j = 0; j < H; j++) {
    const hj = hidden[j];
    const row = j * D;
    for (let d = 0; d < D; d++) out[d] += hj * w2.f64[row + d];
  }
  for (let d = 0; d < D; d++) out[d] += b2.f64[d];
  return normalizeVector(out);
}
