"""Log-mel spectrogram front-end feeding the audio embedding backends.

STFT with a periodic Hann window and zero center-padding, power spectrum
through an HTK-scale triangular mel filterbank, then a floored log. The
parameters live in :class:`AudioConfig`, which is shipped inside a prompt
bundle so they always match the encoder the bundle was exported with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio_io import AudioClip

LOG_FLOOR_DEFAULT = math.log(1e-10)


@dataclass(frozen=True)
class AudioConfig:
    sample_rate_hz: int = 44100
    n_mels: int = 64
    n_fft: int = 1024
    hop_length: int = 320
    window_seconds: float = 7.0
    log_floor: float = LOG_FLOOR_DEFAULT

    def __post_init__(self):
        if self.sample_rate_hz <= 0 or self.n_mels <= 0 or self.n_fft <= 0:
            raise ValueError("sample_rate_hz, n_mels, n_fft must be positive")
        if self.hop_length <= 0 or self.window_seconds <= 0:
            raise ValueError("hop_length and window_seconds must be positive")

    @property
    def window_samples(self) -> int:
        return round(self.window_seconds * self.sample_rate_hz)

    def to_json_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "n_mels": self.n_mels,
            "n_fft": self.n_fft,
            "hop_length": self.hop_length,
            "window_seconds": self.window_seconds,
            "log_floor": self.log_floor,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AudioConfig":
        expected = {"sample_rate_hz", "n_mels", "n_fft", "hop_length", "window_seconds", "log_floor"}
        unknown = set(obj) - expected
        if unknown:
            raise ValueError(f"unknown audio_config keys: {sorted(unknown)}")
        missing = expected - set(obj)
        if missing:
            raise ValueError(f"missing audio_config keys: {sorted(missing)}")
        return cls(
            sample_rate_hz=int(obj["sample_rate_hz"]),
            n_mels=int(obj["n_mels"]),
            n_fft=int(obj["n_fft"]),
            hop_length=int(obj["hop_length"]),
            window_seconds=float(obj["window_seconds"]),
            log_floor=float(obj["log_floor"]),
        )


@dataclass(frozen=True)
class MelSpectrogram:
    frames: np.ndarray  # (T, n_mels) log-mel energies
    frame_rate: float


def hertz_to_mel(freq):
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hertz(mels):
    return 700.0 * (np.power(10.0, np.asarray(mels, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(n_mels: int, n_fft: int, sample_rate_hz: int) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) triangular filters, HTK mel spacing, unit peak."""
    fft_freqs = np.linspace(0.0, sample_rate_hz / 2.0, n_fft // 2 + 1)
    mel_points = np.linspace(0.0, float(hertz_to_mel(sample_rate_hz / 2.0)), n_mels + 2)
    hz_points = mel_to_hertz(mel_points)

    diff = np.diff(hz_points)
    slopes = hz_points[None, :] - fft_freqs[:, None]
    rising = -slopes[:, :-2] / diff[:-1]
    falling = slopes[:, 2:] / diff[1:]
    fb = np.maximum(0.0, np.minimum(rising, falling))
    fb.flags.writeable = False
    return fb.T


@lru_cache(maxsize=8)
def _hann_periodic(n_fft: int) -> np.ndarray:
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft)
    w.flags.writeable = False
    return w


def mel_power_frames(clip: AudioClip, cfg: AudioConfig) -> np.ndarray:
    """(T, n_mels) linear-power mel frames, no floor or log.

    Exactly 2-homogeneous in input amplitude, which is what the mock
    backend relies on for its scale-invariance contract.
    """
    if clip.sample_rate_hz != cfg.sample_rate_hz:
        raise ValueError(
            f"clip rate {clip.sample_rate_hz} != configured rate {cfg.sample_rate_hz}"
        )
    x = clip.samples
    pad = cfg.n_fft // 2
    padded = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    n_frames = 1 + x.size // cfg.hop_length

    starts = cfg.hop_length * np.arange(n_frames)
    idx = starts[:, None] + np.arange(cfg.n_fft)[None, :]
    frames = padded[idx] * _hann_periodic(cfg.n_fft)
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    return power @ mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate_hz).T


def mel_spectrogram(clip: AudioClip, cfg: AudioConfig) -> MelSpectrogram:
    power = mel_power_frames(clip, cfg)
    frames = np.log(np.maximum(power, math.exp(cfg.log_floor)))
    return MelSpectrogram(frames=frames, frame_rate=cfg.sample_rate_hz / cfg.hop_length)
