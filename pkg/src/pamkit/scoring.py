"""The PAM score and its prompt-averaging variants.

A window's score is a two-class softmax over scaled dot products between the
audio embedding and a pair of opposing text prompt embeddings: the "high"
prompt describes clean audio, the "low" prompt degraded audio. The softmax
is computed from the logit difference so the complement identity
score(h, b) + score(b, h) == 1.0 holds exactly in floating point.

Clip-level scores average the per-window scores, never the embeddings, so
each recorded per_window value stays a genuine single-window score.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip, load_wav, resample, window_clip
from .bundle import PromptBundle

STRATEGIES = ("single", "pam", "avg_sim", "avg_pairs")
DEFAULT_AVG_PAIRS = (("h1", "b2"), ("h2", "b1"))


@dataclass(frozen=True)
class PamResult:
    pam: float
    per_window: tuple[float, ...]
    strategy: str
    prompt_ids_used: tuple[str, ...]
    tau_used: float


@dataclass(frozen=True)
class BatchItem:
    path: str
    result: PamResult | None = None
    error: str | None = None


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("embedding must be 1-D")
    return v


def _check_dims(*vectors):
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise ValueError(f"embedding dim mismatch: {sorted(dims)}")


def cosine_similarity(a, b) -> float:
    a, b = _as_vector(a), _as_vector(b)
    _check_dims(a, b)
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def single_prompt_score(v, u_h) -> float:
    return (cosine_similarity(v, u_h) + 1.0) / 2.0


def _softmax_pair(z_h: float, z_b: float) -> float:
    # branch on the larger logit; the smaller-class probability t/(1+t)
    # with t <= 1 never overflows, and 1 - q keeps swap complements exact
    if z_h >= z_b:
        t = math.exp(z_b - z_h)
        return 1.0 - t / (1.0 + t)
    t = math.exp(z_h - z_b)
    return t / (1.0 + t)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0:
        raise ValueError("tau must be > 0")
    return tau


def pam_window(v, u_h, u_b, tau: float = 1.0) -> float:
    v, u_h, u_b = _as_vector(v), _as_vector(u_h), _as_vector(u_b)
    _check_dims(v, u_h, u_b)
    tau = _check_tau(tau)
    return _softmax_pair(tau * float(u_h @ v), tau * float(u_b @ v))


def pam_avg_sim(v, highs, lows, tau: float = 1.0) -> float:
    """Average the dot products within each role, then one softmax."""
    if len(highs) == 0 or len(lows) == 0:
        raise ValueError("prompt lists must be non-empty")
    v = _as_vector(v)
    highs = [_as_vector(u) for u in highs]
    lows = [_as_vector(u) for u in lows]
    _check_dims(v, *highs, *lows)
    tau = _check_tau(tau)
    z_h = tau * (math.fsum(float(u @ v) for u in highs) / len(highs))
    z_b = tau * (math.fsum(float(u @ v) for u in lows) / len(lows))
    return _softmax_pair(z_h, z_b)


def pam_avg_pairs(v, pairs, tau: float = 1.0) -> float:
    """Score each (high, low) pair separately and average the scores."""
    if len(pairs) == 0:
        raise ValueError("pair list must be non-empty")
    scores = [pam_window(v, u_h, u_b, tau) for u_h, u_b in pairs]
    return math.fsum(scores) / len(scores)


def resolve_tau(bundle: PromptBundle, tau_override=None) -> float:
    """τ precedence: explicit number > "bundle" (opt in to the exported
    logit scale) > 1.0. The bundle value is never applied silently."""
    if tau_override is None:
        return 1.0
    if tau_override == "bundle":
        return 1.0 if bundle.logit_scale is None else _check_tau(bundle.logit_scale)
    return _check_tau(tau_override)


def _prompt_by_id_or_role(bundle: PromptBundle, preferred_id: str, role: str):
    for p in bundle.prompts:
        if p.id == preferred_id and p.role == role:
            return p
    candidates = bundle.prompts_with_role(role)
    if not candidates:
        raise ValueError(f"bundle has no prompt with role {role!r}")
    return candidates[0]


class _WindowScorer:
    """Resolves a strategy against a bundle once, then scores embeddings."""

    def __init__(self, bundle: PromptBundle, strategy: str, tau: float, pairs=None):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        self.strategy = strategy
        self.tau = tau
        if strategy == "single":
            prompt = _prompt_by_id_or_role(bundle, "h1", "high")
            self.prompt_ids = (prompt.id,)
            self._high = bundle.embedding_for(prompt.id)
        elif strategy == "pam":
            high = _prompt_by_id_or_role(bundle, "h1", "high")
            low = _prompt_by_id_or_role(bundle, "b1", "low")
            self.prompt_ids = (high.id, low.id)
            self._high = bundle.embedding_for(high.id)
            self._low = bundle.embedding_for(low.id)
        elif strategy == "avg_sim":
            highs = bundle.prompts_with_role("high")
            lows = bundle.prompts_with_role("low")
            if not highs or not lows:
                raise ValueError("avg_sim needs at least one prompt per role")
            self.prompt_ids = tuple(p.id for p in highs + lows)
            self._highs = [bundle.embedding_for(p.id) for p in highs]
            self._lows = [bundle.embedding_for(p.id) for p in lows]
        else:
            pairs = DEFAULT_AVG_PAIRS if pairs is None else tuple(pairs)
            id_set = {p.id for p in bundle.prompts}
            for high_id, low_id in pairs:
                if high_id not in id_set or low_id not in id_set:
                    raise ValueError(
                        f"missing prompt id for strategy avg_pairs: ({high_id!r}, {low_id!r})"
                    )
            self.prompt_ids = tuple(pid for pair in pairs for pid in pair)
            self._pairs = [
                (bundle.embedding_for(h), bundle.embedding_for(b)) for h, b in pairs
            ]

    def score(self, embedding: np.ndarray) -> float:
        if self.strategy == "single":
            return single_prompt_score(embedding, self._high)
        if self.strategy == "pam":
            return pam_window(embedding, self._high, self._low, self.tau)
        if self.strategy == "avg_sim":
            return pam_avg_sim(embedding, self._highs, self._lows, self.tau)
        return pam_avg_pairs(embedding, self._pairs, self.tau)


def score_clip(
    backend,
    bundle: PromptBundle,
    clip: AudioClip,
    strategy: str = "pam",
    *,
    window_seconds: float | None = None,
    hop_seconds: float | None = None,
    tau=None,
    pairs=None,
) -> PamResult:
    tau_used = resolve_tau(bundle, tau)
    scorer = _WindowScorer(bundle, strategy, tau_used, pairs)

    cfg = bundle.audio_config
    if clip.sample_rate_hz != cfg.sample_rate_hz:
        clip = resample(clip, cfg.sample_rate_hz)
    win_s = cfg.window_seconds if window_seconds is None else float(window_seconds)
    hop_s = win_s if hop_seconds is None else float(hop_seconds)

    per_window = tuple(
        scorer.score(backend.embed(window)) for window in window_clip(clip, win_s, hop_s)
    )
    return PamResult(
        pam=float(np.mean(per_window)),
        per_window=per_window,
        strategy=strategy,
        prompt_ids_used=scorer.prompt_ids,
        tau_used=tau_used,
    )


def score_batch(
    backend,
    bundle: PromptBundle,
    paths,
    strategy: str = "pam",
    parallelism: int = 1,
    **kwargs,
) -> list[BatchItem]:
    """Score many files; failures become per-item error records, and the
    output order always matches the manifest order."""
    paths = [str(p) for p in paths]
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def work(path: str) -> BatchItem:
        try:
            clip = load_wav(path)
            result = score_clip(backend, bundle, clip, strategy, **kwargs)
            return BatchItem(path=path, result=result)
        except Exception as exc:  # recorded, not fatal
            return BatchItem(path=path, error=f"{type(exc).__name__}: {exc}")

    if parallelism == 1 or len(paths) <= 1:
        return [work(p) for p in paths]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(work, paths))
