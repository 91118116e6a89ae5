"""Parametric distortion operators for building controlled degradation ladders.

Every operator maps an AudioClip to a new AudioClip with the same length and
sample rate, output confined to [-1, 1]. Stochastic operators draw from the
counter-based generator in rng.py, so a (seed, severity) pair pins the output
bit-for-bit on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .audio_io import AudioClip

DISTORTION_KINDS = (
    "gaussian_noise_std",
    "gaussian_noise_snr",
    "tanh",
    "mu_law",
    "reverb",
    "low_pass",
    "high_pass",
)

# Severity ladders used by `pamkit distort` when a spec omits them. Ordered
# mildest to harshest, which for SNR and bit depth means numerically downward.
DEFAULT_LADDERS: dict[str, tuple[float, ...]] = {
    "gaussian_noise_std": (0.0, 0.01, 0.02, 0.05, 0.1, 0.2),
    "gaussian_noise_snr": (40.0, 30.0, 20.0, 10.0, 5.0, 0.0),
    "tanh": (0.5, 1.0, 2.0, 5.0, 10.0, 20.0),
    "mu_law": (16.0, 8.0, 6.0, 4.0, 3.0, 2.0),
    "reverb": (0.1, 0.3, 0.5, 1.0, 2.0),
}


@dataclass(frozen=True)
class DistortionSpec:
    kind: str
    severity: float
    mu: float = 255.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DISTORTION_KINDS:
            raise ValueError(f"unknown distortion kind: {self.kind!r}")
        if self.kind == "gaussian_noise_std" and self.severity < 0:
            raise ValueError("noise std must be >= 0")
        if self.kind == "tanh" and self.severity <= 0:
            raise ValueError("tanh gain must be > 0")
        if self.kind == "mu_law":
            bits = self.severity
            if bits != int(bits) or not 2 <= bits <= 16:
                raise ValueError("mu-law bit depth must be an integer in [2, 16]")
            if self.mu < 1:
                raise ValueError("mu must be >= 1")
        if self.kind == "reverb" and self.severity <= 0:
            raise ValueError("rt60 must be > 0")
        if self.kind in ("low_pass", "high_pass") and self.severity <= 0:
            raise ValueError("cutoff must be > 0")

    def to_json_dict(self) -> dict:
        obj: dict = {"kind": self.kind, "severity": self.severity}
        if self.kind == "mu_law":
            obj["mu"] = self.mu
        if self.kind in ("gaussian_noise_std", "gaussian_noise_snr", "reverb"):
            obj["seed"] = self.seed
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DistortionSpec":
        unknown = set(obj) - {"kind", "severity", "mu", "bits", "seed"}
        if unknown:
            raise ValueError(f"unknown distortion spec keys: {sorted(unknown)}")
        severity = obj.get("severity")
        if severity is None and "bits" in obj:
            severity = obj["bits"]
        if "kind" not in obj or severity is None:
            raise ValueError("distortion spec needs 'kind' and 'severity'")
        return cls(
            kind=obj["kind"],
            severity=float(severity),
            mu=float(obj.get("mu", 255.0)),
            seed=int(obj.get("seed", 0)),
        )


def _clipped(samples: np.ndarray, template: AudioClip) -> AudioClip:
    return AudioClip(np.clip(samples, -1.0, 1.0), template.sample_rate_hz)


def gaussian_noise_std(clip: AudioClip, sigma: float, seed: int = 0) -> AudioClip:
    if sigma < 0:
        raise ValueError("noise std must be >= 0")
    noise = sigma * rng.gaussian(seed, len(clip))
    return _clipped(clip.samples + noise, clip)


def gaussian_noise_snr(clip: AudioClip, snr_db: float, seed: int = 0) -> AudioClip:
    """Add white noise scaled so the empirical SNR before clipping is exact."""
    signal_power = float(np.mean(clip.samples**2))
    if signal_power == 0.0:
        raise ValueError("undefined SNR for silent signal")
    raw = rng.gaussian(seed, len(clip))
    raw_rms = float(np.sqrt(np.mean(raw**2)))
    target_rms = np.sqrt(signal_power * 10.0 ** (-snr_db / 10.0))
    return _clipped(clip.samples + (target_rms / raw_rms) * raw, clip)


def tanh_distortion(clip: AudioClip, gain: float) -> AudioClip:
    if gain <= 0:
        raise ValueError("tanh gain must be > 0")
    return _clipped(np.tanh(gain * clip.samples) / np.tanh(gain), clip)


def mu_law(clip: AudioClip, mu: float = 255.0, bits: int = 8) -> AudioClip:
    """Mu-law compand, mid-tread quantize at `bits`, then expand."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if not 2 <= bits <= 16:
        raise ValueError("mu-law bit depth must be an integer in [2, 16]")
    x = clip.samples
    companded = np.sign(x) * np.log1p(mu * np.abs(x)) / np.log1p(mu)
    steps = float(2 ** (bits - 1))
    quantized = np.clip(np.floor(companded * steps + 0.5), -steps, steps - 1) / steps
    expanded = np.sign(quantized) * (np.power(1.0 + mu, np.abs(quantized)) - 1.0) / mu
    return _clipped(expanded, clip)


def synthetic_impulse_response(rt60_seconds: float, sample_rate_hz: int, seed: int = 0) -> AudioClip:
    """Exponentially decaying white noise reaching -60 dB at rt60."""
    if rt60_seconds <= 0:
        raise ValueError("rt60 must be > 0")
    n = round(rt60_seconds * sample_rate_hz) + 1
    t = np.arange(n) / sample_rate_hz
    envelope = np.power(10.0, -3.0 * t / rt60_seconds)
    ir = rng.gaussian(seed, n) * envelope
    return AudioClip(ir / np.max(np.abs(ir)), sample_rate_hz)


def reverb_ir(clip: AudioClip, ir: AudioClip) -> AudioClip:
    """FFT-convolve with an impulse response, truncate to the input length,
    and rescale so the output peak matches the input peak."""
    if ir.sample_rate_hz != clip.sample_rate_hz:
        raise ValueError(
            f"impulse response rate {ir.sample_rate_hz} != clip rate {clip.sample_rate_hz}"
        )
    n = len(clip)
    n_full = n + len(ir) - 1
    n_fft = 1 << (n_full - 1).bit_length()
    wet = np.fft.irfft(np.fft.rfft(clip.samples, n_fft) * np.fft.rfft(ir.samples, n_fft), n_fft)[:n]
    peak_in = float(np.max(np.abs(clip.samples)))
    peak_wet = float(np.max(np.abs(wet)))
    if peak_wet > 0.0 and peak_in > 0.0:
        wet = wet * (peak_in / peak_wet)
    return _clipped(wet, clip)


def reverb(clip: AudioClip, rt60_seconds: float, seed: int = 0) -> AudioClip:
    return reverb_ir(clip, synthetic_impulse_response(rt60_seconds, clip.sample_rate_hz, seed))


def _rbj_coefficients(kind: str, cutoff_hz: float, sample_rate_hz: int):
    # Butterworth response: biquad at Q = 1/sqrt(2)
    w0 = 2.0 * np.pi * cutoff_hz / sample_rate_hz
    cw, sw = np.cos(w0), np.sin(w0)
    alpha = sw / np.sqrt(2.0)
    a0 = 1.0 + alpha
    if kind == "low_pass":
        b0 = b2 = (1.0 - cw) / 2.0
        b1 = 1.0 - cw
    else:
        b0 = b2 = (1.0 + cw) / 2.0
        b1 = -(1.0 + cw)
    return b0 / a0, b1 / a0, b2 / a0, (-2.0 * cw) / a0, (1.0 - alpha) / a0


def biquad_filter(clip: AudioClip, kind: str, cutoff_hz: float) -> AudioClip:
    if kind not in ("low_pass", "high_pass"):
        raise ValueError(f"unknown filter kind: {kind!r}")
    if not 0.0 < cutoff_hz < clip.sample_rate_hz / 2.0:
        raise ValueError(
            f"cutoff {cutoff_hz} Hz out of range (0, {clip.sample_rate_hz / 2.0}) Hz"
        )
    b0, b1, b2, a1, a2 = _rbj_coefficients(kind, cutoff_hz, clip.sample_rate_hz)
    return _clipped(kernels.biquad_df2t(clip.samples, b0, b1, b2, a1, a2), clip)


def apply_spec(clip: AudioClip, spec: DistortionSpec) -> AudioClip:
    if spec.kind == "gaussian_noise_std":
        return gaussian_noise_std(clip, spec.severity, spec.seed)
    if spec.kind == "gaussian_noise_snr":
        return gaussian_noise_snr(clip, spec.severity, spec.seed)
    if spec.kind == "tanh":
        return tanh_distortion(clip, spec.severity)
    if spec.kind == "mu_law":
        return mu_law(clip, mu=spec.mu, bits=int(spec.severity))
    if spec.kind == "reverb":
        return reverb(clip, spec.severity, spec.seed)
    return biquad_filter(clip, spec.kind, spec.severity)


def sweep(
    clip: AudioClip,
    kind: str,
    severities=None,
    base_seed: int = 0,
    mu: float = 255.0,
) -> list[tuple[float, AudioClip]]:
    """Apply one distortion kind at each severity; stochastic kinds use
    seed = base_seed + index so rungs are independent but reproducible."""
    if severities is None:
        if kind not in DEFAULT_LADDERS:
            raise ValueError(f"no default ladder for kind: {kind!r}")
        severities = DEFAULT_LADDERS[kind]
    severities = [float(s) for s in severities]
    if len(severities) == 0:
        return []
    diffs = np.diff(severities)
    if len(severities) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("severities must be strictly monotonic")
    out = []
    for i, severity in enumerate(severities):
        spec = DistortionSpec(kind=kind, severity=severity, mu=mu, seed=base_seed + i)
        out.append((severity, apply_spec(clip, spec)))
    return out
