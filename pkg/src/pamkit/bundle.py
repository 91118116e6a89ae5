"""Prompt bundle: a directory packaging everything a scoring run needs.

Layout:
    bundle.json     manifest: format_version, model_id, dim, logit_scale,
                    audio_config, optional encoder_model, sha256 checksums
    prompts.json    {"prompts": [{"id", "text", "role"}, ...]}
    embeddings.bin  float32 little-endian, row-major, one unit row per prompt
    model.onnx      optional neural encoder referenced by encoder_model

JSON files are written canonically (sorted keys, 2-space indent, trailing
newline) so a save/load/save cycle is byte-identical and checksums are
stable across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .mel import AudioConfig

FORMAT_VERSION = 1
ROLE_HIGH = "high"
ROLE_LOW = "low"
UNIT_NORM_TOL = 1e-6


class BundleError(ValueError):
    pass


@dataclass(frozen=True)
class Prompt:
    id: str
    text: str
    role: str

    def __post_init__(self):
        if self.role not in (ROLE_HIGH, ROLE_LOW):
            raise BundleError(f"prompt {self.id!r} has unknown role {self.role!r}")
        if not self.id:
            raise BundleError("prompt id must be non-empty")


@dataclass(frozen=True)
class PromptBundle:
    model_id: str
    dim: int
    audio_config: AudioConfig
    prompts: tuple[Prompt, ...]
    embeddings: np.ndarray  # (n_prompts, dim) float32 unit rows
    logit_scale: float | None = None
    encoder_model: str | None = None
    bundle_dir: Path | None = None

    def __post_init__(self):
        ids = [p.id for p in self.prompts]
        if len(set(ids)) != len(ids):
            raise BundleError("duplicate prompt ids in bundle")
        roles = {p.role for p in self.prompts}
        if not {ROLE_HIGH, ROLE_LOW} <= roles:
            raise BundleError("bundle must contain opposing prompts")
        emb = np.asarray(self.embeddings, dtype=np.float32)
        if emb.shape != (len(self.prompts), self.dim):
            raise BundleError("embedding matrix size mismatch")
        norms = np.linalg.norm(emb.astype(np.float64), axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
        if bad.size:
            raise BundleError(f"prompt embedding row {bad[0]} is not unit-norm")
        emb.flags.writeable = False
        object.__setattr__(self, "embeddings", emb)

    def prompt_index(self, prompt_id: str) -> int:
        for i, p in enumerate(self.prompts):
            if p.id == prompt_id:
                return i
        raise KeyError(f"no prompt with id {prompt_id!r}")

    def embedding_for(self, prompt_id: str) -> np.ndarray:
        return self.embeddings[self.prompt_index(prompt_id)].astype(np.float64)

    def prompts_with_role(self, role: str) -> list[Prompt]:
        return [p for p in self.prompts if p.role == role]

    def encoder_path(self) -> Path | None:
        if self.encoder_model is None or self.bundle_dir is None:
            return None
        return self.bundle_dir / self.encoder_model


def canonical_json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_file(directory: Path, name: str) -> bytes:
    path = directory / name
    if not path.is_file():
        raise BundleError(f"missing {name} in bundle directory {directory}")
    return path.read_bytes()


def load_bundle(path: str | Path) -> PromptBundle:
    directory = Path(path)
    if not directory.is_dir():
        raise BundleError(f"bundle directory not found: {directory}")

    manifest_bytes = _read_file(directory, "bundle.json")
    try:
        manifest = json.loads(manifest_bytes)
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle.json is not valid JSON: {exc}") from exc

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise BundleError(
            f"unsupported bundle format_version {version!r}, expected {FORMAT_VERSION}"
        )

    for key in ("model_id", "dim", "audio_config", "checksums"):
        if key not in manifest:
            raise BundleError(f"bundle.json missing required key {key!r}")

    checksums = manifest["checksums"]
    named_files = {"prompts.json": _read_file(directory, "prompts.json"),
                   "embeddings.bin": _read_file(directory, "embeddings.bin")}
    encoder_model = manifest.get("encoder_model")
    if encoder_model is not None:
        named_files[encoder_model] = _read_file(directory, encoder_model)
    for name, data in named_files.items():
        recorded = checksums.get(name)
        if recorded is None:
            raise BundleError(f"bundle.json has no checksum for {name}")
        if _sha256(data) != recorded:
            raise BundleError(f"checksum mismatch for {name}")

    prompts_obj = json.loads(named_files["prompts.json"])
    if not isinstance(prompts_obj, dict) or "prompts" not in prompts_obj:
        raise BundleError("prompts.json must be an object with a 'prompts' list")
    prompts = tuple(
        Prompt(id=entry["id"], text=entry["text"], role=entry["role"])
        for entry in prompts_obj["prompts"]
    )

    dim = int(manifest["dim"])
    raw = named_files["embeddings.bin"]
    if len(raw) != len(prompts) * dim * 4:
        raise BundleError("embedding matrix size mismatch")
    embeddings = np.frombuffer(raw, dtype="<f4").reshape(len(prompts), dim)

    logit_scale = manifest.get("logit_scale")
    return PromptBundle(
        model_id=str(manifest["model_id"]),
        dim=dim,
        audio_config=AudioConfig.from_json_dict(manifest["audio_config"]),
        prompts=prompts,
        embeddings=embeddings,
        logit_scale=None if logit_scale is None else float(logit_scale),
        encoder_model=encoder_model,
        bundle_dir=directory,
    )


def save_bundle(bundle: PromptBundle, path: str | Path, encoder_bytes: bytes | None = None) -> Path:
    """Write a bundle directory. `encoder_bytes` supplies the encoder file
    when `bundle.encoder_model` is set and the bundle did not come from disk."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)

    prompts_bytes = canonical_json_bytes(
        {"prompts": [{"id": p.id, "text": p.text, "role": p.role} for p in bundle.prompts]}
    )
    emb_bytes = np.ascontiguousarray(bundle.embeddings, dtype="<f4").tobytes()

    checksums = {
        "prompts.json": _sha256(prompts_bytes),
        "embeddings.bin": _sha256(emb_bytes),
    }
    files = {"prompts.json": prompts_bytes, "embeddings.bin": emb_bytes}

    if bundle.encoder_model is not None:
        if encoder_bytes is None:
            source = bundle.encoder_path()
            if source is None or not source.is_file():
                raise BundleError("encoder_model set but no encoder bytes available")
            encoder_bytes = source.read_bytes()
        files[bundle.encoder_model] = encoder_bytes
        checksums[bundle.encoder_model] = _sha256(encoder_bytes)

    manifest = {
        "format_version": FORMAT_VERSION,
        "model_id": bundle.model_id,
        "dim": bundle.dim,
        "logit_scale": bundle.logit_scale,
        "audio_config": bundle.audio_config.to_json_dict(),
        "encoder_model": bundle.encoder_model,
        "checksums": checksums,
    }
    files["bundle.json"] = canonical_json_bytes(manifest)

    for name, data in files.items():
        (directory / name).write_bytes(data)
    return directory


DEFAULT_PROMPTS = (
    Prompt(id="h1", text="the sound is clear and clean", role=ROLE_HIGH),
    Prompt(id="b1", text="the sound is noisy and with artifacts", role=ROLE_LOW),
    Prompt(id="h2", text="the sound quality is good", role=ROLE_HIGH),
    Prompt(id="b2", text="the sound quality is bad", role=ROLE_LOW),
)
