import math

import numpy as np
import pytest

from pamkit import (
    AudioClip,
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
from pamkit.distortions import DEFAULT_LADDERS

from conftest import make_tone


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


class TestGaussianNoise:
    def test_sigma_zero_is_identity(self, tone):
        out = gaussian_noise_std(tone, 0.0, seed=1)
        assert np.array_equal(out.samples, tone.samples)

    def test_empirical_std_on_silence(self):
        clip = AudioClip(np.zeros(100_000), 8000)
        out = gaussian_noise_std(clip, 0.1, seed=2)
        assert 0.098 <= float(out.samples.std()) <= 0.102

    def test_deterministic_and_seed_sensitive(self, tone):
        a = gaussian_noise_std(tone, 0.05, seed=3)
        b = gaussian_noise_std(tone, 0.05, seed=3)
        c = gaussian_noise_std(tone, 0.05, seed=4)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_output_clipped(self):
        clip = AudioClip(0.95 * np.ones(50_000), 8000)
        out = gaussian_noise_std(clip, 0.5, seed=5)
        assert out.samples.max() <= 1.0 and out.samples.min() >= -1.0

    def test_negative_sigma_rejected(self, tone):
        with pytest.raises(ValueError):
            gaussian_noise_std(tone, -0.1)


class TestGaussianNoiseSnr:
    @pytest.mark.parametrize("snr_db", [0.0, 10.0, 20.0, 40.0])
    def test_exact_snr_before_clipping(self, snr_db):
        clip = make_tone(440, 2.0, amp=0.1)
        out = gaussian_noise_snr(clip, snr_db, seed=6)
        noise = out.samples - clip.samples
        measured = 10.0 * math.log10(np.mean(clip.samples**2) / np.mean(noise**2))
        assert abs(measured - snr_db) < 0.1

    def test_noise_rms_at_20db(self):
        # unit-RMS square-ish signal: alternating +-0.1 scaled to unit rms
        x = 0.1 * np.sign(np.sin(2 * np.pi * 440 * np.arange(16000) / 8000))
        x[x == 0] = 0.1
        clip = AudioClip(x, 8000)
        out = gaussian_noise_snr(clip, 20.0, seed=7)
        noise_rms = rms(out.samples - clip.samples)
        assert abs(noise_rms - rms(x) * 0.1) < 1e-12

    def test_silent_input_rejected(self):
        with pytest.raises(ValueError, match="undefined SNR for silent signal"):
            gaussian_noise_snr(AudioClip(np.zeros(100), 8000), 10.0)


class TestTanh:
    def test_endpoints_fixed(self):
        clip = AudioClip(np.array([-1.0, 0.0, 1.0]), 8000)
        for gain in (0.5, 1.0, 5.0, 20.0):
            out = tanh_distortion(clip, gain)
            assert out.samples.tolist() == [-1.0, 0.0, 1.0]

    def test_matches_closed_form(self, tone):
        out = tanh_distortion(tone, 3.0)
        want = np.tanh(3.0 * tone.samples) / math.tanh(3.0)
        assert np.allclose(out.samples, want, atol=1e-15)

    def test_small_gain_is_nearly_identity(self, tone):
        out = tanh_distortion(tone, 0.01)
        assert rms(out.samples - tone.samples) < 1e-3

    def test_memoryless_commutes_with_permutation(self, tone):
        perm = np.random.default_rng(0).permutation(len(tone))
        direct = tanh_distortion(tone, 2.0).samples[perm]
        permuted = tanh_distortion(AudioClip(tone.samples[perm], 8000), 2.0).samples
        assert np.array_equal(direct, permuted)

    def test_bad_gain(self, tone):
        with pytest.raises(ValueError):
            tanh_distortion(tone, 0.0)


class TestMuLaw:
    def test_zero_maps_to_zero(self):
        out = mu_law(AudioClip(np.array([0.0, 0.5, -0.5]), 8000))
        assert out.samples[0] == 0.0

    def test_round_trip_within_one_cell(self):
        x = np.linspace(-1.0, 1.0, 20001)
        out = mu_law(AudioClip(x, 8000), mu=255.0, bits=8).samples
        mu, steps = 255.0, 2.0**7
        companded = np.sign(x) * np.log1p(mu * np.abs(x)) / np.log1p(mu)
        q = np.clip(np.floor(companded * steps + 0.5), -steps, steps - 1) / steps

        def expand(y):
            return np.sign(y) * ((1.0 + mu) ** np.abs(y) - 1.0) / mu

        hi = expand(np.minimum(q + 1.0 / steps, 1.0))
        lo = expand(np.maximum(q - 1.0 / steps, -1.0))
        cell = np.maximum(hi - expand(q), expand(q) - lo)
        assert np.all(np.abs(out - x) <= cell + 1e-12)

    def test_more_bits_reduce_error(self):
        x = np.linspace(-0.9, 0.9, 5001)
        clip = AudioClip(x, 8000)
        errs = [
            float(np.max(np.abs(mu_law(clip, bits=b).samples - x))) for b in (4, 8, 12)
        ]
        assert errs[0] > errs[1] > errs[2]

    def test_memoryless_commutes_with_permutation(self, tone):
        perm = np.random.default_rng(1).permutation(len(tone))
        direct = mu_law(tone, bits=6).samples[perm]
        permuted = mu_law(AudioClip(tone.samples[perm], 8000), bits=6).samples
        assert np.array_equal(direct, permuted)

    def test_validation(self, tone):
        with pytest.raises(ValueError):
            mu_law(tone, mu=0.5)
        with pytest.raises(ValueError):
            mu_law(tone, bits=1)
        with pytest.raises(ValueError):
            mu_law(tone, bits=17)


class TestReverb:
    def test_impulse_response_shape_and_decay(self):
        ir = synthetic_impulse_response(0.5, 8000, seed=1)
        assert len(ir) == round(0.5 * 8000) + 1
        assert float(np.max(np.abs(ir.samples))) == 1.0
        early = rms(ir.samples[:400])
        late = rms(ir.samples[-400:])
        assert late < early * 0.01  # roughly -60 dB across the tail

    def test_identity_under_unit_impulse(self, tone):
        ir = AudioClip(np.concatenate([[1.0], np.zeros(63)]), 8000)
        out = reverb_ir(tone, ir)
        assert np.allclose(out.samples, tone.samples, atol=1e-12)

    def test_peak_and_length_preserved(self, tone):
        out = reverb(tone, 0.3, seed=2)
        assert len(out) == len(tone)
        assert abs(float(np.max(np.abs(out.samples))) - float(np.max(np.abs(tone.samples)))) < 1e-12

    def test_deterministic(self, tone):
        a = reverb(tone, 0.3, seed=3)
        b = reverb(tone, 0.3, seed=3)
        assert np.array_equal(a.samples, b.samples)

    def test_rate_mismatch_rejected(self, tone):
        ir = synthetic_impulse_response(0.1, 16000, seed=0)
        with pytest.raises(ValueError, match="rate"):
            reverb_ir(tone, ir)

    def test_bad_rt60(self, tone):
        with pytest.raises(ValueError):
            reverb(tone, 0.0)


class TestBiquadFilters:
    def test_low_pass_attenuates_high_tone(self):
        hi = make_tone(3000, 1.0)
        out = biquad_filter(hi, "low_pass", 500.0)
        assert rms(out.samples[2000:]) < rms(hi.samples[2000:]) * 0.02

    def test_high_pass_attenuates_low_tone(self):
        lo = make_tone(100, 1.0)
        out = biquad_filter(lo, "high_pass", 2000.0)
        assert rms(out.samples[2000:]) < rms(lo.samples[2000:]) * 0.02

    def test_minus_three_db_at_cutoff(self):
        for kind in ("low_pass", "high_pass"):
            tone = make_tone(1000, 4.0, amp=0.25)
            out = biquad_filter(tone, kind, 1000.0)
            gain_db = 20.0 * math.log10(rms(out.samples[8000:]) / rms(tone.samples[8000:]))
            assert abs(gain_db - (-3.0103)) < 0.3

    def test_cutoff_range_enforced(self, tone):
        with pytest.raises(ValueError, match="cutoff"):
            biquad_filter(tone, "low_pass", 4000.0)
        with pytest.raises(ValueError, match="cutoff"):
            biquad_filter(tone, "high_pass", 0.0)

    def test_unknown_kind(self, tone):
        with pytest.raises(ValueError, match="kind"):
            biquad_filter(tone, "band_pass", 1000.0)


class TestSpecAndSweep:
    def test_spec_json_round_trip(self):
        spec = DistortionSpec(kind="gaussian_noise_snr", severity=20.0, seed=3)
        assert DistortionSpec.from_json_dict(spec.to_json_dict()) == spec

    def test_spec_bits_alias(self):
        spec = DistortionSpec.from_json_dict({"kind": "mu_law", "bits": 6, "mu": 255})
        assert spec.severity == 6.0

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="unknown distortion kind"):
            DistortionSpec(kind="bitcrush", severity=1.0)
        with pytest.raises(ValueError):
            DistortionSpec(kind="mu_law", severity=1.5)
        with pytest.raises(ValueError, match="unknown distortion spec keys"):
            DistortionSpec.from_json_dict({"kind": "tanh", "severity": 1, "gain": 2})

    def test_apply_spec_dispatch(self, tone):
        spec = DistortionSpec(kind="tanh", severity=2.0)
        assert np.array_equal(
            apply_spec(tone, spec).samples, tanh_distortion(tone, 2.0).samples
        )

    def test_sweep_seeds_by_index(self, tone):
        rungs = sweep(tone, "gaussian_noise_std", [0.01, 0.02], base_seed=10)
        assert [s for s, _ in rungs] == [0.01, 0.02]
        direct0 = gaussian_noise_std(tone, 0.01, seed=10)
        direct1 = gaussian_noise_std(tone, 0.02, seed=11)
        assert np.array_equal(rungs[0][1].samples, direct0.samples)
        assert np.array_equal(rungs[1][1].samples, direct1.samples)

    def test_sweep_defaults(self, tone):
        rungs = sweep(tone, "tanh")
        assert [s for s, _ in rungs] == list(DEFAULT_LADDERS["tanh"])

    def test_sweep_empty_and_monotonic(self, tone):
        assert sweep(tone, "tanh", []) == []
        sweep(tone, "gaussian_noise_snr", [40.0, 20.0, 0.0])  # decreasing ok
        with pytest.raises(ValueError, match="monotonic"):
            sweep(tone, "tanh", [1.0, 3.0, 2.0])

    def test_all_outputs_bounded_and_same_length(self, tone):
        for kind, severities in DEFAULT_LADDERS.items():
            for severity, out in sweep(tone, kind, severities[:2]):
                assert len(out) == len(tone)
                assert out.sample_rate_hz == tone.sample_rate_hz
                assert float(np.max(np.abs(out.samples))) <= 1.0
