import numpy as np
import pytest

from pamkit import AudioClip, AudioConfig, Prompt, PromptBundle, load_bundle, save_bundle
from pamkit import rng

SMALL_CFG = AudioConfig(
    sample_rate_hz=8000, n_mels=16, n_fft=256, hop_length=80, window_seconds=1.0
)
DIM = 16


def make_tone(freq_hz: float, seconds: float, rate: int = 8000, amp: float = 0.4) -> AudioClip:
    t = np.arange(round(seconds * rate)) / rate
    return AudioClip(amp * np.sin(2.0 * np.pi * freq_hz * t), rate)


def make_bundle(directory, cfg: AudioConfig = SMALL_CFG, dim: int = DIM, logit_scale=None):
    emb = rng.gaussian(99, 4 * dim).reshape(4, dim)
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    prompts = (
        Prompt("h1", "the sound is clear and clean", "high"),
        Prompt("b1", "the sound is noisy and with artifacts", "low"),
        Prompt("h2", "the sound quality is good", "high"),
        Prompt("b2", "the sound quality is bad", "low"),
    )
    bundle = PromptBundle(
        model_id="fixture",
        dim=dim,
        audio_config=cfg,
        prompts=prompts,
        embeddings=emb.astype(np.float32),
        logit_scale=logit_scale,
    )
    save_bundle(bundle, directory)
    return load_bundle(directory)


@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    return make_bundle(tmp_path_factory.mktemp("bundle") / "b")


@pytest.fixture()
def tone():
    return make_tone(440.0, 1.5)


@pytest.fixture()
def criterion(request):
    """Tag the running test with a one-line acceptance criterion."""

    def note(text: str):
        request.node.user_properties.append(("criterion", text))

    return note


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    entries = []
    for outcome, tag in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(outcome, ()):
            for name, value in getattr(report, "user_properties", ()) or ():
                if name == "criterion" and report.when == "call":
                    entries.append(f"[{tag}] {value}")
    if entries:
        terminalreporter.section("acceptance criteria")
        for line in entries:
            terminalreporter.write_line(line)
