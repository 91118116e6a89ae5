/**
 * Log-mel front-end mirroring the Python scoring package: STFT with a
 * periodic Hann window and zero center-padding, HTK-scale triangular mel
 * filterbank with unit peaks, floored natural log.
 *
 * The formulas (and their evaluation order, where it matters) are kept
 * identical so an embedding computed here agrees with one computed by the
 * consumer of the exported bundle to roundoff. One deliberate restriction:
 * n_fft must be a power of two, because the radix-2 FFT is all we carry.
 */

import { isPowerOfTwo, rfftPower } from "./fft.js";

export interface AudioConfigJson {
  sample_rate_hz: number;
  n_mels: number;
  n_fft: number;
  hop_length: number;
  window_seconds: number;
  log_floor: number;
}

export const LOG_FLOOR_DEFAULT = Math.log(1e-10);

export function windowSamples(cfg: AudioConfigJson): number {
  return Math.round(cfg.window_seconds * cfg.sample_rate_hz);
}

export function validateAudioConfig(cfg: AudioConfigJson): void {
  if (cfg.sample_rate_hz <= 0 || cfg.n_mels <= 0 || cfg.n_fft <= 0) {
    throw new Error("sample_rate_hz, n_mels, n_fft must be positive");
  }
  if (cfg.hop_length <= 0 || cfg.window_seconds <= 0) {
    throw new Error("hop_length and window_seconds must be positive");
  }
  if (!isPowerOfTwo(cfg.n_fft)) {
    throw new Error(`n_fft must be a power of two for export, got ${cfg.n_fft}`);
  }
}

export function hertzToMel(freq: number): number {
  return 2595.0 * Math.log10(1.0 + freq / 700.0);
}

export function melToHertz(mels: number): number {
  return 700.0 * (Math.pow(10.0, mels / 2595.0) - 1.0);
}

// numpy-style linspace: fixed step, endpoint forced to stop exactly
function linspace(start: number, stop: number, num: number): Float64Array {
  const out = new Float64Array(num);
  const step = (stop - start) / (num - 1);
  for (let i = 0; i < num; i++) out[i] = start + step * i;
  out[num - 1] = stop;
  return out;
}

/** (nMels x nBins) row-major triangular filters, HTK mel spacing, unit peak. */
export function melFilterbank(nMels: number, nFft: number, sampleRateHz: number): Float64Array {
  const nBins = nFft / 2 + 1;
  const fftFreqs = linspace(0.0, sampleRateHz / 2.0, nBins);
  const melPoints = linspace(0.0, hertzToMel(sampleRateHz / 2.0), nMels + 2);
  const hzPoints = new Float64Array(nMels + 2);
  for (let i = 0; i < hzPoints.length; i++) hzPoints[i] = melToHertz(melPoints[i]);

  const fb = new Float64Array(nMels * nBins);
  for (let m = 0; m < nMels; m++) {
    const lo = hzPoints[m];
    const mid = hzPoints[m + 1];
    const hi = hzPoints[m + 2];
    const up = mid - lo;
    const down = hi - mid;
    for (let b = 0; b < nBins; b++) {
      const rising = (fftFreqs[b] - lo) / up;
      const falling = (hi - fftFreqs[b]) / down;
      fb[m * nBins + b] = Math.max(0.0, Math.min(rising, falling));
    }
  }
  return fb;
}

function hannPeriodic(nFft: number): Float64Array {
  const w = new Float64Array(nFft);
  for (let i = 0; i < nFft; i++) {
    w[i] = 0.5 - 0.5 * Math.cos((2.0 * Math.PI * i) / nFft);
  }
  return w;
}

export interface MelFrames {
  /** (T x nMels) row-major */
  frames: Float64Array;
  T: number;
  F: number;
}

/** Linear-power mel frames, no floor or log. T = 1 + floor(n / hop). */
export function melPowerFrames(samples: Float64Array, cfg: AudioConfigJson): MelFrames {
  validateAudioConfig(cfg);
  const n = samples.length;
  const pad = cfg.n_fft >> 1;
  const padded = new Float64Array(n + 2 * pad);
  padded.set(samples, pad);

  const nFrames = 1 + Math.floor(n / cfg.hop_length);
  const nBins = cfg.n_fft / 2 + 1;
  const window = hannPeriodic(cfg.n_fft);
  const fb = melFilterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate_hz);

  const frames = new Float64Array(nFrames * cfg.n_mels);
  const buf = new Float64Array(cfg.n_fft);
  for (let t = 0; t < nFrames; t++) {
    const start = t * cfg.hop_length;
    for (let i = 0; i < cfg.n_fft; i++) {
      buf[i] = padded[start + i] * window[i];
    }
    const power = rfftPower(buf);
    for (let m = 0; m < cfg.n_mels; m++) {
      let acc = 0.0;
      const row = m * nBins;
      for (let b = 0; b < nBins; b++) {
        acc += power[b] * fb[row + b];
      }
      frames[t * cfg.n_mels + m] = acc;
    }
  }
  return { frames, T: nFrames, F: cfg.n_mels };
}

export function logMelFrames(samples: Float64Array, cfg: AudioConfigJson): MelFrames {
  const mel = melPowerFrames(samples, cfg);
  const floor = Math.exp(cfg.log_floor);
  for (let i = 0; i < mel.frames.length; i++) {
    mel.frames[i] = Math.log(Math.max(mel.frames[i], floor));
  }
  return mel;
}
