"""Audio embedding backends.

All backends share one contract: embed() takes an AudioClip that is exactly
one analysis window long at the bundle's sample rate and returns a unit-norm
float64 vector of the bundle's dimension.

MockBackend        deterministic stand-in, no model weights needed
PrecomputedBackend looks embeddings up by content hash, never computes
NeuralBackend      runs the bundle's ONNX encoder on log-mel frames
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import json

import numpy as np

from . import onnx_rt, rng
from .audio_io import AudioClip
from .bundle import BundleError, PromptBundle, canonical_json_bytes
from .kernels import fnv1a64
from .mel import mel_power_frames, mel_spectrogram

MOCK_WEIGHT_STREAM = 7  # rng stream reserved for mock projection weights


def check_window(clip: AudioClip, bundle: PromptBundle) -> None:
    cfg = bundle.audio_config
    if clip.sample_rate_hz != cfg.sample_rate_hz:
        raise ValueError(
            f"clip rate {clip.sample_rate_hz} != bundle rate {cfg.sample_rate_hz}"
        )
    if len(clip) != cfg.window_samples:
        raise ValueError(
            f"clip must be exactly one analysis window "
            f"({cfg.window_samples} samples), got {len(clip)}"
        )


def content_hash(clip: AudioClip) -> str:
    """Stable identity for a clip: FNV-1a 64 over float32 LE samples
    followed by the sample rate as a little-endian uint32."""
    data = clip.samples.astype("<f4").tobytes() + np.uint32(clip.sample_rate_hz).tobytes()
    return f"fnv1a:{fnv1a64(np.frombuffer(data, dtype=np.uint8)):016x}"


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / norm


class MockBackend:
    """Fixed random linear map over power-domain mel frames.

    Working in the power domain (before the log floor) makes the embedding
    exactly invariant to input gain: scaling the waveform scales every mel
    power by the same factor, which the final normalization removes.
    """

    def __init__(self, bundle: PromptBundle, seed: int = 0):
        self.bundle = bundle
        self.seed = seed
        self._weights: dict[int, np.ndarray] = {}

    def _projection(self, n_features: int) -> np.ndarray:
        w = self._weights.get(n_features)
        if w is None:
            flat = rng.gaussian(self.seed, self.bundle.dim * n_features, stream=MOCK_WEIGHT_STREAM)
            w = flat.reshape(self.bundle.dim, n_features)
            self._weights[n_features] = w
        return w

    def embed(self, clip: AudioClip, key_hint: str | None = None) -> np.ndarray:
        check_window(clip, self.bundle)
        features = mel_power_frames(clip, self.bundle.audio_config).ravel()
        weights = self._projection(features.size)
        v = weights @ features
        if float(np.linalg.norm(v)) == 0.0:
            # digital silence has no spectrum to project; fall back to a
            # fixed direction so the result is still deterministic
            v = weights @ np.ones_like(features)
        return _normalize(v)


@dataclass
class PrecomputedStore:
    """On-disk map from clip keys to embedding rows.

    Layout: store.json with {"dim", "keys": {key: row}} next to vectors.bin
    holding float32 LE rows in row order.
    """

    dim: int
    keys: dict[str, int] = field(default_factory=dict)
    vectors: np.ndarray | None = None

    def add(self, key: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise ValueError(f"vector must have shape ({self.dim},)")
        if key in self.keys:
            raise ValueError(f"duplicate key {key!r}")
        row = vector.astype("<f4")[None, :]
        self.vectors = row if self.vectors is None else np.vstack([self.vectors, row])
        self.keys[key] = self.vectors.shape[0] - 1

    def get(self, key: str) -> np.ndarray | None:
        row = self.keys.get(key)
        if row is None or self.vectors is None:
            return None
        return self.vectors[row].astype(np.float64)

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        vectors = self.vectors if self.vectors is not None else np.zeros((0, self.dim), "<f4")
        (directory / "store.json").write_bytes(
            canonical_json_bytes({"dim": self.dim, "keys": self.keys})
        )
        (directory / "vectors.bin").write_bytes(np.ascontiguousarray(vectors, "<f4").tobytes())
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "PrecomputedStore":
        directory = Path(directory)
        meta = json.loads((directory / "store.json").read_text())
        dim = int(meta["dim"])
        keys = {str(k): int(v) for k, v in meta["keys"].items()}
        raw = (directory / "vectors.bin").read_bytes()
        n_rows = len(keys)
        if len(raw) != n_rows * dim * 4:
            raise ValueError("vectors.bin size does not match store.json")
        vectors = np.frombuffer(raw, dtype="<f4").reshape(n_rows, dim) if n_rows else None
        return cls(dim=dim, keys=keys, vectors=vectors)


class PrecomputedBackend:
    """Serves stored embeddings; refuses to invent one for an unknown clip."""

    def __init__(self, bundle: PromptBundle, store: PrecomputedStore):
        if store.dim != bundle.dim:
            raise ValueError(f"store dim {store.dim} != bundle dim {bundle.dim}")
        self.bundle = bundle
        self.store = store

    def embed(self, clip: AudioClip, key_hint: str | None = None) -> np.ndarray:
        check_window(clip, self.bundle)
        tried = []
        if key_hint is not None:
            tried.append(key_hint)
        tried.append(content_hash(clip))
        for key in tried:
            vector = self.store.get(key)
            if vector is not None:
                return _normalize(vector)
        raise KeyError(f"no precomputed embedding under keys {tried}")


class NeuralBackend:
    """Feeds log-mel frames through the ONNX encoder shipped in the bundle."""

    def __init__(self, bundle: PromptBundle, model_data: bytes | None = None):
        self.bundle = bundle
        if model_data is None:
            path = bundle.encoder_path()
            if path is None or not path.is_file():
                raise BundleError("bundle has no encoder model")
            model_data = path.read_bytes()
        self.model = onnx_rt.load_model(model_data)
        if len(self.model.input_names) != 1 or len(self.model.output_names) != 1:
            raise BundleError("encoder must have exactly one input and one output")

    def embed(self, clip: AudioClip, key_hint: str | None = None) -> np.ndarray:
        check_window(clip, self.bundle)
        frames = mel_spectrogram(clip, self.bundle.audio_config).frames
        feed = frames.astype(np.float32)[None, :, :]
        (out,) = self.model.run({self.model.input_names[0]: feed}).values()
        v = np.asarray(out, dtype=np.float64).reshape(-1)
        if v.size != self.bundle.dim:
            raise BundleError(
                f"encoder produced {v.size} values, bundle dim is {self.bundle.dim}"
            )
        return _normalize(v)


def make_backend(
    name: str,
    bundle: PromptBundle,
    store_path: str | Path | None = None,
    seed: int = 0,
):
    if name == "mock":
        return MockBackend(bundle, seed=seed)
    if name == "precomputed":
        if store_path is None:
            raise ValueError("precomputed backend needs a store path")
        return PrecomputedBackend(bundle, PrecomputedStore.load(store_path))
    if name == "neural":
        return NeuralBackend(bundle)
    raise ValueError(f"unknown backend {name!r}")
