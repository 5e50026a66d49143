import numpy as np
import pytest
from scipy.signal import welch

from neuroeval.protocols import gen_oddball
from neuroeval.session import CHANNELS_32, Event, EventLog, Recording
from neuroeval.synth import (
    ForwardModelConfig,
    StudyParams,
    channel_profile,
    errp_template,
    gen_noise,
    gen_participant_study,
    gen_workload_eeg,
    inject_erps,
    p300_template,
    piecewise_latent,
    preset_config,
)

CFG = ForwardModelConfig(seed=5)


def band_energy_fraction(x, fs, bands):
    """FFT oracle: fraction of total energy inside the given bands."""
    freqs = np.fft.rfftfreq(x.shape[-1], 1.0 / fs)
    spec = np.abs(np.fft.rfft(x, axis=-1)) ** 2
    total = spec.sum()
    inside = 0.0
    for lo, hi in bands:
        inside += spec[..., (freqs >= lo) & (freqs <= hi)].sum()
    return inside / total


class TestGenNoise:
    def test_pink_psd_slope(self):
        rec = gen_noise(CFG, 60.0)
        freqs, psd = welch(rec.samples, fs=512.0, nperseg=4096, axis=-1)
        sel = (freqs >= 1.0) & (freqs <= 40.0)
        slope = np.polyfit(np.log(freqs[sel]), np.log(psd.mean(axis=0)[sel]), 1)[0]
        assert -1.3 <= slope <= -0.7

    def test_zero_amplitude(self):
        cfg = ForwardModelConfig(noise_amp_uv=0.0)
        assert np.all(gen_noise(cfg, 1.0).samples == 0.0)

    def test_exact_rms(self):
        rec = gen_noise(CFG, 10.0)
        rms = np.sqrt(np.mean(rec.samples**2, axis=1))
        np.testing.assert_allclose(rms, CFG.noise_amp_uv, rtol=1e-12)

    def test_deterministic(self):
        a = gen_noise(CFG, 2.0)
        b = gen_noise(CFG, 2.0)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_channels_and_rate(self):
        rec = gen_noise(CFG, 1.5)
        assert rec.channel_labels == CHANNELS_32
        assert rec.n_samples == 768


class TestWorkloadEeg:
    def test_sources_confined_to_their_bands(self):
        rec = gen_workload_eeg(CFG, 0.5, 30.0)
        noise = gen_noise(CFG, 30.0)
        residual = rec.samples - noise.samples
        frac = band_energy_fraction(residual, 512.0, [(4.0, 6.0), (7.0, 13.0)])
        assert frac >= 0.99

    def test_theta_power_tracks_latent(self):
        hi = gen_workload_eeg(CFG, 1.0, 40.0)
        lo = gen_workload_eeg(CFG, 0.0, 40.0)
        fz = list(CFG.channel_labels).index("Fz")

        def theta_power(rec):
            freqs = np.fft.rfftfreq(rec.n_samples, 1 / 512.0)
            spec = np.abs(np.fft.rfft(rec.samples[fz])) ** 2
            return spec[(freqs >= 4.0) & (freqs <= 6.0)].sum()

        assert theta_power(hi) / theta_power(lo) > 1.5

    def test_zero_gain_leaves_power_flat(self):
        cfg = preset_config("null", seed=3)
        hi = gen_workload_eeg(cfg, 1.0, 20.0)
        lo = gen_workload_eeg(cfg, 0.0, 20.0)
        np.testing.assert_array_equal(hi.samples, lo.samples)

    def test_alpha_anticorrelates_with_latent(self):
        n = int(120 * 512)
        ramp = np.linspace(0.0, 1.0, n)
        rec = gen_workload_eeg(CFG, ramp, 120.0)
        pz = list(CFG.channel_labels).index("Pz")
        # per-2s-window alpha energy vs latent
        win = 1024
        powers, lats = [], []
        for s in range(0, n - win, win):
            seg = rec.samples[pz, s : s + win]
            freqs = np.fft.rfftfreq(win, 1 / 512.0)
            spec = np.abs(np.fft.rfft(seg)) ** 2
            powers.append(spec[(freqs >= 7) & (freqs <= 13)].sum())
            lats.append(ramp[s : s + win].mean())
        r = np.corrcoef(powers, lats)[0, 1]
        assert r <= -0.5

    def test_latent_outside_range_rejected(self):
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            gen_workload_eeg(CFG, 1.5, 2.0)


class TestInjectErps:
    def _silent_config(self):
        return ForwardModelConfig(noise_amp_uv=0.0, seed=0)

    def test_single_target_reproduces_template(self):
        cfg = self._silent_config()
        rec = gen_noise(cfg, 4.0)
        log = EventLog([Event(2.0, "sound", {"is_target": True})])
        out = inject_erps(rec, log, cfg, attention_scale=1.0)
        epoch = out.samples[:, 2 * 512 : 3 * 512]
        profile = channel_profile(cfg.channel_labels, cfg.p300_center, cfg.p300_width_ch)
        np.testing.assert_allclose(
            epoch, profile[:, None] * p300_template(cfg)[None, :], atol=1e-12
        )
        assert np.all(out.samples[:, : 2 * 512] == 0.0)

    def test_scale_zero_is_identity(self):
        rec = gen_noise(CFG, 4.0)
        log = EventLog([Event(1.0, "sound", {"is_target": True})])
        out = inject_erps(rec, log, CFG, attention_scale=0.0)
        np.testing.assert_array_equal(out.samples, rec.samples)

    def test_superposition_of_overlapping_events(self):
        cfg = self._silent_config()
        rec = gen_noise(cfg, 4.0)
        log1 = EventLog([Event(1.0, "sound", {"is_target": True})])
        log2 = EventLog([Event(1.5, "sound", {"is_target": True})])
        both = EventLog(list(log1.events) + list(log2.events))
        out = inject_erps(rec, both, cfg)
        expected = (
            inject_erps(rec, log1, cfg).samples + inject_erps(rec, log2, cfg).samples
        )
        np.testing.assert_allclose(out.samples, expected, atol=1e-12)

    def test_distractors_and_clean_selections_untouched(self):
        rec = gen_noise(CFG, 4.0)
        log = EventLog(
            [
                Event(1.0, "sound", {"is_target": False}),
                Event(2.0, "selection", {"correct": True, "perceived_error": False}),
                Event(2.5, "movement", {"is_error": False}),
            ]
        )
        out = inject_erps(rec, log, CFG)
        np.testing.assert_array_equal(out.samples, rec.samples)

    def test_error_movement_gets_template(self):
        cfg = self._silent_config()
        rec = gen_noise(cfg, 4.0)
        log = EventLog([Event(1.0, "movement", {"is_error": True})])
        out = inject_erps(rec, log, cfg)
        epoch = out.samples[:, 512:1024]
        profile = channel_profile(cfg.channel_labels, cfg.errp_center, cfg.errp_width_ch)
        np.testing.assert_allclose(
            epoch, profile[:, None] * errp_template(cfg)[None, :], atol=1e-12
        )

    def test_template_support_inside_one_second(self):
        for template in (p300_template(CFG), errp_template(CFG)):
            assert len(template) == 512
            assert abs(template[0]) < 1e-3 * np.abs(template).max()
            assert abs(template[-1]) < 1e-3 * np.abs(template).max()


class TestPiecewiseLatent:
    def test_segments_and_default(self):
        f = piecewise_latent([(0.0, 2.0, 0.25), (5.0, 6.0, 1.0)], default=0.0)
        np.testing.assert_allclose(f(np.array([0.0, 1.9, 3.0, 5.5])), [0.25, 0.25, 0.0, 1.0])


class TestParticipantStudy:
    def test_bundle_shape_and_determinism(self):
        cfg = preset_config("paper-like", seed=2)
        params = StudyParams(
            nback_blocks_per_level=1,
            oddball_n_sounds=40,
            robot_interactions=30,
            learning_loops=1,
            recall_loops=0,
        )
        a = gen_participant_study(cfg, params, seed=7)
        assert set(a) == {"nback", "oddball", "robot", "game_keyboard", "game_touch"}
        b = gen_participant_study(cfg, params, seed=7)
        for name in a:
            np.testing.assert_array_equal(
                a[name].recording.samples, b[name].recording.samples
            )
            assert a[name].events == b[name].events

    def test_workload_latents_ordered_by_difficulty(self):
        params = StudyParams()
        w = params.workload_by_difficulty
        assert w["EASY"] < w["MEDIUM"] < w["HARD"] < w["ULTRA"]
        assert params.game_workload("ULTRA", "touch") > params.game_workload("ULTRA", "keyboard")
        a = params.attention_by_difficulty
        assert a["EASY"] > a["MEDIUM"] > a["HARD"] > a["ULTRA"]

    def test_truth_sidecar_contents(self):
        cfg = preset_config("paper-like", seed=4)
        params = StudyParams(
            nback_blocks_per_level=1,
            oddball_n_sounds=40,
            robot_interactions=30,
            learning_loops=1,
            recall_loops=0,
        )
        sessions = gen_participant_study(cfg, params, seed=9)
        for tech in ("keyboard", "touch"):
            truth = sessions[f"game_{tech}"].truth
            assert len(truth["workload_segments"]) == 8
            assert truth["perceived_error_rate"] == params.perceived_error_rate[tech]
        assert sessions["nback"].truth["workload_segments"][0][2] in (0.0, 1.0)

    def test_all_recordings_validate(self):
        cfg = preset_config("high-snr", seed=6)
        params = StudyParams(
            nback_blocks_per_level=1,
            oddball_n_sounds=30,
            robot_interactions=20,
            learning_loops=1,
            recall_loops=0,
        )
        for s in gen_participant_study(cfg, params, seed=3).values():
            assert isinstance(s.recording, Recording)
            assert np.all(np.isfinite(s.recording.samples))
