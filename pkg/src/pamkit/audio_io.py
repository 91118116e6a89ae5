"""WAV loading/saving, resampling, and fixed-length windowing.

Everything downstream operates on :class:`AudioClip`: a mono float64
waveform in [-1, 1] plus its sample rate. WAV parsing is done by hand so
that malformed containers fail with precise errors instead of whatever a
codec library happens to raise.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import polyphase_fir

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE

RESAMPLE_TAPS_PER_PHASE = 32
RESAMPLE_KAISER_BETA = 8.0


class WavFormatError(ValueError):
    """Raised for malformed or unsupported WAV containers."""


@dataclass(frozen=True)
class AudioClip:
    """Mono waveform. samples: 1-D float64, expected range [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioClip is mono (1-D samples)")
        if samples.size == 0:
            raise ValueError("AudioClip samples must be non-empty")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip samples must be finite")
        if not (isinstance(self.sample_rate_hz, (int, np.integer)) and self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz must be a positive integer")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def __len__(self) -> int:
        return self.samples.size


def _parse_fmt(body: bytes) -> tuple[int, int, int, int]:
    if len(body) < 16:
        raise WavFormatError("malformed fmt chunk")
    fmt, channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if fmt == _EXTENSIBLE:
        if len(body) < 40:
            raise WavFormatError("malformed extensible fmt chunk")
        fmt = struct.unpack("<H", body[24:26])[0]
    return fmt, channels, rate, bits


def _decode_samples(data: bytes, fmt: int, bits: int) -> np.ndarray:
    if fmt == _PCM and bits == 16:
        return np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    if fmt == _PCM and bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        val = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        val = (val ^ 0x800000) - 0x800000
        return val.astype(np.float64) / 8388608.0
    if fmt == _PCM and bits == 32:
        return np.frombuffer(data, dtype="<i4").astype(np.float64) / 2147483648.0
    if fmt == _IEEE_FLOAT and bits == 32:
        out = np.frombuffer(data, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(out)):
            raise WavFormatError("non-finite samples in float data")
        return np.clip(out, -1.0, 1.0)
    raise WavFormatError(f"unsupported codec (format tag {fmt}, {bits}-bit)")


def load_wav(path) -> AudioClip:
    """Read a RIFF/WAVE file (PCM 16/24/32 or IEEE float32) as a mono clip.

    Integer full scale maps to +/-1; multichannel input is downmixed by
    arithmetic mean over channels.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt_body = None
    data_span = None
    offset = 12
    while offset + 8 <= len(blob):
        chunk_id = blob[offset : offset + 4]
        size = struct.unpack("<I", blob[offset + 4 : offset + 8])[0]
        body_start = offset + 8
        if chunk_id == b"fmt ":
            if body_start + size > len(blob):
                raise WavFormatError(f"{path}: malformed fmt chunk")
            fmt_body = blob[body_start : body_start + size]
        elif chunk_id == b"data":
            if body_start + size > len(blob):
                raise WavFormatError(f"{path}: truncated data chunk")
            data_span = blob[body_start : body_start + size]
        offset = body_start + size + (size & 1)

    if fmt_body is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if data_span is None:
        raise WavFormatError(f"{path}: missing data chunk")

    fmt, channels, rate, bits = _parse_fmt(fmt_body)
    if channels < 1:
        raise WavFormatError(f"{path}: invalid channel count {channels}")
    if rate < 1:
        raise WavFormatError(f"{path}: invalid sample rate {rate}")
    frame_size = channels * (bits // 8)
    if frame_size == 0 or len(data_span) % frame_size != 0:
        raise WavFormatError(f"{path}: data chunk size inconsistent with frame size")
    if len(data_span) == 0:
        raise WavFormatError(f"{path}: empty data chunk")

    flat = _decode_samples(data_span, fmt, bits)
    if channels > 1:
        flat = flat.reshape(-1, channels).mean(axis=1)
    return AudioClip(flat, rate)


def save_wav(clip: AudioClip, path, bit_depth="32f") -> None:
    """Write clip as PCM 16-bit (bit_depth=16) or IEEE float32 ("32f")."""
    x = clip.samples
    if np.max(np.abs(x)) > 1.0:
        raise ValueError("sample out of range [-1, 1]")

    if bit_depth in (16, "16"):
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        fmt, bits = _PCM, 16
    elif bit_depth == "32f":
        data = x.astype("<f4").tobytes()
        fmt, bits = _IEEE_FLOAT, 32
    else:
        raise ValueError(f"bit_depth must be 16 or '32f', got {bit_depth!r}")

    rate = clip.sample_rate_hz
    block_align = bits // 8
    fmt_chunk = struct.pack("<HHIIHH", fmt, 1, rate, rate * block_align, block_align, bits)
    chunks = [(b"fmt ", fmt_chunk)]
    if fmt == _IEEE_FLOAT:
        chunks.append((b"fact", struct.pack("<I", len(clip))))
    chunks.append((b"data", data))

    body = b"".join(cid + struct.pack("<I", len(c)) + c for cid, c in chunks)
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)


def _design_lowpass(up: int, down: int) -> np.ndarray:
    n_taps = RESAMPLE_TAPS_PER_PHASE * up
    cutoff = min(1.0 / (2 * up), 1.0 / (2 * down))  # cycles/sample at the upsampled rate
    k = np.arange(n_taps, dtype=np.float64)
    center = (n_taps - 1) / 2.0
    h = 2.0 * cutoff * np.sinc(2.0 * cutoff * (k - center))
    h *= np.kaiser(n_taps, RESAMPLE_KAISER_BETA)
    return h * up


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Band-limited rational resampling (polyphase windowed-sinc)."""
    if target_rate_hz <= 0:
        raise ValueError("target_rate_hz must be positive")
    source = clip.sample_rate_hz
    if target_rate_hz == source:
        return clip
    g = math.gcd(target_rate_hz, source)
    up, down = target_rate_hz // g, source // g
    n_out = (2 * len(clip) * up + down) // (2 * down)  # round(len * target / source)
    h = _design_lowpass(up, down)
    delay = (h.shape[0] - 1) // 2
    out = polyphase_fir(clip.samples, h, up, down, delay, n_out)
    return AudioClip(np.clip(out, -1.0, 1.0), target_rate_hz)


def window_clip(clip: AudioClip, window_seconds: float, hop_seconds: float) -> list[AudioClip]:
    """Split into fixed-length windows; the last one is zero-padded to size.

    A clip no longer than one window yields exactly one padded window.
    """
    if not (window_seconds >= hop_seconds > 0):
        raise ValueError("need window_seconds >= hop_seconds > 0")
    rate = clip.sample_rate_hz
    win = round(window_seconds * rate)
    hop = round(hop_seconds * rate)
    if win < 1 or hop < 1:
        raise ValueError("window and hop must span at least one sample")

    n = len(clip)
    count = 1 if n <= win else math.ceil((n - win) / hop) + 1
    windows = []
    for i in range(count):
        start = i * hop
        chunk = clip.samples[start : start + win]
        if chunk.size < win:
            chunk = np.concatenate([chunk, np.zeros(win - chunk.size)])
        windows.append(AudioClip(chunk, rate))
    return windows
