import math

import numpy as np
import pytest

from spf import pitch
from spf.errors import AlignmentError, InsufficientData, InvalidInput
from spf.resample import FeatureSequence, ResampleConfig
from spf.vocoder import PitchContour


def contour(f0):
    f0 = np.asarray(f0, dtype=float)
    return PitchContour(f0, f0 > 0, 256)


class TestStats:
    def test_constant_speaker_hits_floor(self):
        s = pitch.compute_speaker_stats([contour([200.0] * 10)], "a")
        assert s.log_f0_mean == pytest.approx(math.log(200))
        assert s.log_f0_std == 1e-3
        assert s.frame_count == 10

    def test_two_point_statistics(self):
        s = pitch.compute_speaker_stats([contour([150.0] * 8), contour([math.e * 150] * 8)], "a")
        assert s.log_f0_mean == pytest.approx(math.log(150) + 0.5, abs=1e-12)
        assert s.log_f0_std == pytest.approx(0.5, abs=1e-12)

    def test_unvoiced_frames_ignored(self):
        s = pitch.compute_speaker_stats([contour([100.0, 0, 0, 100.0])], "a")
        assert s.frame_count == 2

    def test_no_voiced_frames(self):
        with pytest.raises(InsufficientData):
            pitch.compute_speaker_stats([contour([0.0, 0.0])], "a")

    def test_incremental_equals_single_pass(self):
        rng = np.random.default_rng(0)
        parts = [rng.uniform(80, 300, n) for n in (5, 17, 1, 40)]
        single = pitch.compute_speaker_stats([contour(np.concatenate(parts))], "a")
        accs = [pitch.accumulate(contour(p)) for p in parts]
        merged = accs[0]
        for a in accs[1:]:
            merged = merged.merge(a)
        inc = merged.finalize("a")
        assert inc.log_f0_mean == pytest.approx(single.log_f0_mean, rel=1e-12)
        assert inc.log_f0_std == pytest.approx(single.log_f0_std, rel=1e-12)
        logs = np.log(np.concatenate(parts))
        assert inc.log_f0_std == pytest.approx(np.std(logs), rel=1e-12)

    def test_linear_domain(self):
        s = pitch.compute_speaker_stats([contour([100.0, 200.0])], "a", domain="linear")
        assert s.log_f0_mean == 150 and s.log_f0_std == 50

    def test_bad_domain(self):
        with pytest.raises(InvalidInput):
            pitch.compute_speaker_stats([contour([100.0])], "a", domain="mel")

    def test_json_round_trip(self, tmp_path):
        s = pitch.SpeakerStats("spk/1", 5.1, 0.2, 99)
        s.save(tmp_path / "s.json")
        assert pitch.SpeakerStats.load(tmp_path / "s.json") == s
        assert pitch.SpeakerStats.from_json(s.to_json()) == s


class TestNormalize:
    STATS = pitch.SpeakerStats("a", 5.0, 0.25, 10)

    def test_mean_maps_to_zero(self):
        z = pitch.normalize_contour(contour([math.exp(5.0)]), self.STATS)
        assert z.z[0] == pytest.approx(0, abs=1e-12)

    def test_one_std(self):
        z = pitch.normalize_contour(contour([math.exp(5.25)]), self.STATS)
        assert z.z[0] == pytest.approx(1, abs=1e-12)

    def test_self_normalization(self):
        f0 = np.random.default_rng(1).uniform(90, 250, 200)
        f0[::7] = 0
        c = contour(f0)
        z = pitch.normalize_contour(c, pitch.compute_speaker_stats([c], "a"))
        assert z.z[c.voiced].mean() == pytest.approx(0, abs=1e-12)
        assert z.z[c.voiced].std() == pytest.approx(1, abs=1e-12)
        assert np.all(z.z[~c.voiced] == 0)


class TestQuantize:
    def test_boundaries(self):
        np.testing.assert_array_equal(pitch.quantize_bins([-4.0, 4.0, -9.0, 9.0]), [0, 255, 0, 255])

    def test_midpoint(self):
        assert pitch.quantize_bins([0.0], 256, (-4, 4))[0] == 128

    def test_unvoiced_column(self):
        zc = pitch.NormalizedContour(np.array([0.0, 1.0]), np.array([False, True]))
        oh = pitch.quantize_onehot(zc)
        assert oh.data.shape == (2, 257)
        assert oh.data[0, 256] == 1 and oh.data[0].sum() == 1
        assert oh.bins[0] == 256

    def test_rows_are_onehot(self):
        rng = np.random.default_rng(2)
        zc = pitch.NormalizedContour(rng.normal(0, 3, 300), rng.random(300) > 0.3)
        oh = pitch.quantize_onehot(zc, 64)
        assert np.all(oh.data.sum(axis=1) == 1)
        assert oh.data.dtype == np.float32

    @pytest.mark.parametrize("kw", [{"n_bins": 1}, {"z_range": (1.0, 1.0)}])
    def test_bad_args(self, kw):
        zc = pitch.NormalizedContour(np.zeros(2), np.ones(2, bool))
        with pytest.raises(InvalidInput):
            pitch.quantize_onehot(zc, **kw)


class TestConverterInput:
    def _inputs(self, T_spec=50, T_pitch=50, d=4, n_bins=16):
        rng = np.random.default_rng(0)
        spec = FeatureSequence(rng.standard_normal((T_spec, d)), "mel")
        zc = pitch.NormalizedContour(rng.normal(size=T_pitch), rng.random(T_pitch) > 0.2)
        return spec, pitch.quantize_onehot(zc, n_bins)

    def test_unit_rate_is_concatenation(self):
        spec, oh = self._inputs()
        out = pitch.build_pitch_converter_input(spec, oh, np.random.default_rng(0),
                                                ResampleConfig(rate_range=(1, 1)))
        np.testing.assert_array_equal(out.data, np.hstack([spec.data, oh.data]))
        assert out.data.shape[1] == 4 + 16 + 1

    @pytest.mark.parametrize("t_pitch", [48, 49, 51, 52])
    def test_small_mismatch_truncates(self, t_pitch):
        spec, oh = self._inputs(50, t_pitch)
        out = pitch.build_pitch_converter_input(spec, oh, np.random.default_rng(0),
                                                ResampleConfig(rate_range=(1, 1)))
        assert out.data.shape[0] == min(50, t_pitch)

    @pytest.mark.parametrize("t_pitch", [47, 53])
    def test_large_mismatch(self, t_pitch):
        spec, oh = self._inputs(50, t_pitch)
        with pytest.raises(AlignmentError):
            pitch.build_pitch_converter_input(spec, oh, np.random.default_rng(0))

    def test_slack_is_configurable(self):
        spec, oh = self._inputs(50, 45)
        out = pitch.build_pitch_converter_input(spec, oh, np.random.default_rng(0), max_slack=5)
        assert np.all(out.onehot.sum(axis=1) == 1)

    def test_onehot_valid_after_resampling(self):
        spec, oh = self._inputs(200, 200)
        for seed in range(5):
            out = pitch.build_pitch_converter_input(spec, oh, np.random.default_rng(seed))
            assert np.all(out.onehot.sum(axis=1) == 1)
            assert set(np.unique(out.onehot)) <= {0.0, 1.0}
