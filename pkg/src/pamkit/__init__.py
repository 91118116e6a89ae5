"""Reference-free audio quality scoring with opposing text prompts.

An audio clip is embedded window by window, each embedding is compared
against a pair of "high quality" / "low quality" prompt embeddings, and the
softmax over the two similarities becomes the score. The package also ships
the tooling around that number: deterministic distortion ladders, listening
test statistics, and a batch CLI.
"""

from .audio_io import AudioClip, WavFormatError, load_wav, resample, save_wav, window_clip
from .backends import (
    MockBackend,
    NeuralBackend,
    PrecomputedBackend,
    PrecomputedStore,
    content_hash,
    make_backend,
)
from .bundle import (
    DEFAULT_PROMPTS,
    BundleError,
    Prompt,
    PromptBundle,
    load_bundle,
    save_bundle,
)
from .distortions import (
    DEFAULT_LADDERS,
    DistortionSpec,
    apply_spec,
    biquad_filter,
    gaussian_noise_snr,
    gaussian_noise_std,
    mu_law,
    reverb,
    reverb_ir,
    sweep,
    synthetic_impulse_response,
    tanh_distortion,
)
from .mel import AudioConfig, MelSpectrogram, mel_filterbank, mel_power_frames, mel_spectrogram
from .scoring import (
    DEFAULT_AVG_PAIRS,
    STRATEGIES,
    BatchItem,
    PamResult,
    cosine_similarity,
    pam_avg_pairs,
    pam_avg_sim,
    pam_window,
    resolve_tau,
    score_batch,
    score_clip,
    single_prompt_score,
)
from .stats import (
    EvalReport,
    RatingRecord,
    aggregate_mos,
    correlate,
    filter_raters,
    pearson,
    rank_average,
    spearman,
)

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "AudioConfig",
    "BundleError",
    "BatchItem",
    "DEFAULT_AVG_PAIRS",
    "DEFAULT_LADDERS",
    "DEFAULT_PROMPTS",
    "DistortionSpec",
    "EvalReport",
    "MelSpectrogram",
    "MockBackend",
    "NeuralBackend",
    "PamResult",
    "PrecomputedBackend",
    "PrecomputedStore",
    "Prompt",
    "PromptBundle",
    "RatingRecord",
    "STRATEGIES",
    "WavFormatError",
    "aggregate_mos",
    "apply_spec",
    "biquad_filter",
    "content_hash",
    "correlate",
    "cosine_similarity",
    "filter_raters",
    "gaussian_noise_snr",
    "gaussian_noise_std",
    "load_bundle",
    "load_wav",
    "make_backend",
    "mel_filterbank",
    "mel_power_frames",
    "mel_spectrogram",
    "mu_law",
    "pam_avg_pairs",
    "pam_avg_sim",
    "pam_window",
    "pearson",
    "rank_average",
    "resample",
    "resolve_tau",
    "reverb",
    "reverb_ir",
    "save_bundle",
    "save_wav",
    "score_batch",
    "score_clip",
    "single_prompt_score",
    "spearman",
    "sweep",
    "synthetic_impulse_response",
    "tanh_distortion",
    "window_clip",
]
