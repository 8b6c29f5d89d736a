import numpy as np
import pytest

from bwckit import ensemble
from bwckit.corpus import AudioTrack
from bwckit.lexicon import compile_lexicon
from bwckit.separation import SpeakerStream
from bwckit.transcription import merge_transcripts
from bwckit.dsp import mean_square

import oracles
import synth

CFG2 = ensemble.FusionConfig(fusion_length=2)


def _track(samples):
    return AudioTrack(asset_id="t", sample_rate=16000, channels=1,
                      samples=np.asarray(samples, dtype=np.float32))


def _fv(modality, values):
    return ensemble.FeatureVector(modality=modality, values=tuple(values), extractor_chain=("fixture",))


class TestAudioFeatures:
    def test_silence_zero_energy_profile(self):
        fv = ensemble.extract_audio_features(_track(np.zeros(16000)), ("frame-energy",))
        assert fv.values == tuple(0.0 for _ in range(ensemble.DEFAULT_CONFIG.energy_frames))

    def test_pure_tone_centroid(self):
        fv = ensemble.extract_audio_features(_track(synth.tone(440.0, 2.0, 0.5)), ("spectral-centroid",))
        (centroid,) = fv.values
        assert abs(centroid - 440.0) / 440.0 < 0.05

    def test_identity_stage(self):
        samples = synth.tone(440.0, 1.0, 0.5)
        fv = ensemble.extract_audio_features(_track(samples), ("identity",))
        assert fv.extractor_chain == ("identity",)
        assert fv.values == (pytest.approx(float(np.sqrt(mean_square(samples)))),)

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValueError, match="unknown audio stages"):
            ensemble.extract_audio_features(_track(np.zeros(10)), ("mystery",))

    def test_empty_chain_rejected(self):
        with pytest.raises(ValueError):
            ensemble.extract_audio_features(_track(np.zeros(10)), ())

    def test_chain_output_length_is_sum_of_stages(self):
        fv = ensemble.extract_audio_features(
            _track(synth.tone(300, 0.5, 0.4)), ensemble.DEFAULT_AUDIO_CHAIN
        )
        cfg = ensemble.DEFAULT_CONFIG
        assert len(fv.values) == cfg.energy_frames + 1 + 1 + cfg.speaker_slots

    def test_speaker_share_sums_to_one(self):
        samples = synth.tone(350, 1.0, 0.5)
        streams = [
            SpeakerStream(("t", 0), 0, samples, mean_square(samples), 0.0, 1.0, global_speaker=0),
            SpeakerStream(("t", 0), 1, samples * 0.5, mean_square(samples * 0.5), 0.0, 1.0, global_speaker=1),
        ]
        fv = ensemble.extract_audio_features(_track(samples), ("speaker-energy-share",), streams=streams)
        assert sum(fv.values) == pytest.approx(1.0)
        assert fv.values[0] > fv.values[1]


LEXICON = compile_lexicon({
    "politeness": ["thank you", "please"],
    "escalation": ["get down"],
})


def _seg(start, speaker, text):
    from bwckit.transcription import TranscriptSegment
    return TranscriptSegment(
        asset_id="a", chunk_index=0, local_speaker=speaker, global_speaker=speaker,
        start=start, end=start + 1.0, text=text, backend_name="test",
    )


class TestTextFeatures:
    def _transcript(self, officer_text, civilian_text):
        t = merge_transcripts([_seg(0.0, 0, officer_text), _seg(1.0, 1, civilian_text)])
        t.roles[0] = "officer"
        t.roles[1] = "civilian"
        return t

    def test_zero_hits_zero_vector(self):
        t = self._transcript("nothing to see", "move along")
        fv = ensemble.extract_text_features(t, LEXICON)
        assert all(v == 0.0 for v in fv.values)

    def test_politeness_rate(self):
        # 20 officer tokens with exactly two "thank you" hits -> 0.1
        officer = "thank you " * 2 + "word " * 16
        assert len(officer.split()) == 20
        t = self._transcript(officer.strip(), "ok")
        fv = ensemble.extract_text_features(t, LEXICON)
        rates = dict(zip(fv.names, fv.values))
        assert rates["officer:politeness"] == pytest.approx(0.1)
        assert rates["civilian:politeness"] == 0.0

    def test_category_permutation_same_values(self):
        t = self._transcript("thank you officer get down", "please")
        flipped = compile_lexicon({
            "escalation": ["get down"],
            "politeness": ["thank you", "please"],
        })
        original = ensemble.extract_text_features(t, LEXICON)
        permuted = ensemble.extract_text_features(t, flipped)
        assert dict(zip(original.names, original.values)) == dict(zip(permuted.names, permuted.values))

    def test_values_in_unit_interval(self):
        t = self._transcript("please please please", "thank you thank you")
        fv = ensemble.extract_text_features(t, LEXICON)
        assert all(0.0 <= v <= 1.0 for v in fv.values)

    def test_empty_transcript_rejected(self):
        t = merge_transcripts([], asset_id="a")
        with pytest.raises(ValueError):
            ensemble.extract_text_features(t, LEXICON)


class TestImageStub:
    def test_zero_vector(self):
        from bwckit.corpus import VideoAsset
        fv = ensemble.extract_image_features(VideoAsset("v", "/x.wav", 1.0))
        assert fv.values == tuple(0.0 for _ in range(ensemble.DEFAULT_CONFIG.image_length))
        assert fv.extractor_chain == ("image-stub",)

    def test_configured_length_zero(self):
        from bwckit.corpus import VideoAsset
        fv = ensemble.extract_image_features(
            VideoAsset("v", "/x.wav", 1.0), ensemble.FusionConfig(image_length=0)
        )
        assert fv.values == ()


class TestFuse:
    def test_basis_weights_select_audio(self):
        audio, text, image = _fv("audio", (3.0, 4.0)), _fv("text", (9.0, 9.0)), _fv("image", (5.0, 5.0))
        fused = ensemble.fuse(audio, text, image, ensemble.EnsembleWeights(1, 0, 0), CFG2)
        np.testing.assert_array_equal(fused, [3.0, 4.0])

    def test_convexity_identity(self):
        v = (2.0, 7.0)
        weights = ensemble.EnsembleWeights(0.2, 0.5, 0.3)
        fused = ensemble.fuse(_fv("audio", v), _fv("text", v), _fv("image", v), weights, CFG2)
        np.testing.assert_allclose(fused, v)

    def test_half_half(self):
        fused = ensemble.fuse(
            _fv("audio", (1.0, 0.0)), _fv("text", (0.0, 1.0)), _fv("image", (0.0, 0.0)),
            ensemble.EnsembleWeights(0.5, 0.5, 0.0), CFG2,
        )
        np.testing.assert_array_equal(fused, [0.5, 0.5])

    def test_nonfinite_rejected_at_construction(self):
        with pytest.raises(ValueError, match="non-finite"):
            _fv("audio", (float("nan"), 1.0))

    def test_projection_pads_and_truncates(self):
        fused = ensemble.fuse(
            _fv("audio", (1.0,)), _fv("text", (0.0, 0.0, 9.0)), _fv("image", ()),
            ensemble.EnsembleWeights(1.0, 1.0, 1.0), CFG2,
        )
        np.testing.assert_array_equal(fused, [1.0, 0.0])


class TestSimplexGrid:
    def test_half_step_candidates(self):
        grid = {w.as_tuple() for w in ensemble.simplex_grid(0.5)}
        assert grid == {
            (1.0, 0.0, 0.0), (0.5, 0.5, 0.0), (0.5, 0.0, 0.5),
            (0.0, 1.0, 0.0), (0.0, 0.5, 0.5), (0.0, 0.0, 1.0),
        }

    def test_tenth_step_count(self):
        assert len(ensemble.simplex_grid(0.1)) == 66

    def test_all_on_simplex_exactly(self):
        for w in ensemble.simplex_grid(0.1):
            assert w.alpha + w.beta + w.gamma == 1.0
            assert min(w.as_tuple()) >= 0.0

    def test_bad_step_rejected(self):
        with pytest.raises(ValueError):
            ensemble.simplex_grid(0.0)
        with pytest.raises(ValueError):
            ensemble.simplex_grid(0.3)


def _example(label, audio, text, image):
    return ensemble.LabeledExample(
        audio=_fv("audio", audio), text=_fv("text", text), image=_fv("image", image), label=label,
    )


def text_only_fixture():
    """Text separates; audio/image are loud label-free noise."""
    return [
        _example("X", (-10.0, 10.0), (1.0, 0.0), (-10.0, 10.0)),
        _example("X", (10.0, -10.0), (1.0, 0.0), (10.0, -10.0)),
        _example("Y", (10.0, -10.0), (0.0, 1.0), (10.0, -10.0)),
        _example("Y", (-10.0, 10.0), (0.0, 1.0), (-10.0, 10.0)),
    ]


def audio_only_fixture():
    return [
        _example("X", (1.0, 0.0), (-10.0, 10.0), (-10.0, 10.0)),
        _example("X", (1.0, 0.0), (10.0, -10.0), (10.0, -10.0)),
        _example("Y", (0.0, 1.0), (10.0, -10.0), (10.0, -10.0)),
        _example("Y", (0.0, 1.0), (-10.0, 10.0), (-10.0, 10.0)),
    ]


def all_separable_fixture():
    return [
        _example("X", (2.0, 0.0), (2.0, 0.0), (2.0, 0.0)),
        _example("Y", (0.0, 2.0), (0.0, 2.0), (0.0, 2.0)),
    ]


def _as_plain(examples):
    return [
        {"label": ex.label, "audio": list(ex.audio.values), "text": list(ex.text.values),
         "image": list(ex.image.values)}
        for ex in examples
    ]


class TestCalibrate:
    def test_text_only_beta_dominates(self):
        examples = text_only_fixture()
        weights = ensemble.calibrate_weights(examples, 0.1, CFG2)
        oracle_point, oracle_acc = oracles.brute_calibrate(_as_plain(examples), 0.1, 2)
        assert oracles.grid_index(weights.as_tuple(), 0.1) == oracle_point
        # beta is maximal among the top-accuracy tier
        tier = [
            (i, j, 10 - i - j)
            for i in range(11) for j in range(11 - i)
            if oracles.brute_accuracy(
                _as_plain(examples), (i / 10, j / 10, (10 - i - j) / 10), 2
            ) == oracle_acc
        ]
        assert round(weights.beta * 10) == max(j for _, j, _ in tier)
        assert weights.beta == 1.0

    def test_audio_only_alpha_dominates(self):
        examples = audio_only_fixture()
        weights = ensemble.calibrate_weights(examples, 0.1, CFG2)
        oracle_point, _ = oracles.brute_calibrate(_as_plain(examples), 0.1, 2)
        assert oracles.grid_index(weights.as_tuple(), 0.1) == oracle_point
        assert weights.alpha == 1.0

    def test_tie_breaks_to_first_lexicographic(self):
        examples = all_separable_fixture()
        weights = ensemble.calibrate_weights(examples, 0.5, CFG2)
        assert weights.as_tuple() == (0.0, 0.0, 1.0)

    def test_matches_oracle_on_grid_point_half(self):
        examples = text_only_fixture()
        weights = ensemble.calibrate_weights(examples, 0.5, CFG2)
        oracle_point, _ = oracles.brute_calibrate(_as_plain(examples), 0.5, 2)
        assert oracles.grid_index(weights.as_tuple(), 0.5) == oracle_point

    def test_degenerate_labels_rejected(self):
        examples = [_example("only", (1.0, 0.0), (1.0, 0.0), (0.0, 0.0))] * 2
        with pytest.raises(ValueError, match="degenerate labels"):
            ensemble.calibrate_weights(examples, 0.5, CFG2)

    def test_empty_examples_rejected(self):
        with pytest.raises(ValueError):
            ensemble.calibrate_weights([], 0.5, CFG2)


class TestWeightInvariants:
    def test_normalized_simplex_exact_random_draws(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            raw = ensemble.EnsembleWeights(*(float(x) for x in rng.uniform(0.001, 10, 3)))
            w = raw.normalized()
            assert w.alpha + w.beta + w.gamma == 1.0
            assert min(w.as_tuple()) >= 0.0

    def test_fuse_linear_in_weights(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            fvs = [_fv(m, tuple(float(x) for x in rng.normal(size=2))) for m in ("audio", "text", "image")]
            w = ensemble.EnsembleWeights(*(float(x) for x in rng.uniform(0, 2, 3)))
            c = float(rng.uniform(0.1, 5))
            scaled = ensemble.EnsembleWeights(c * w.alpha, c * w.beta, c * w.gamma)
            lhs = ensemble.fuse(*fvs, scaled, CFG2)
            rhs = c * ensemble.fuse(*fvs, w, CFG2)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12)

    def test_argmax_invariant_under_weight_rescaling(self):
        rng = np.random.default_rng(7)
        fvs = [_fv(m, tuple(float(x) for x in rng.normal(size=2))) for m in ("audio", "text", "image")]
        candidates = [
            ensemble.EnsembleWeights(*(float(x) for x in rng.uniform(0, 1, 3))) for _ in range(20)
        ]
        probe = np.array([0.7, -0.2])  # fixed scoring functional

        def argmax_for(scale):
            scores = [
                float(probe @ ensemble.fuse(*fvs, ensemble.EnsembleWeights(
                    scale * w.alpha, scale * w.beta, scale * w.gamma), CFG2))
                for w in candidates
            ]
            return int(np.argmax(scores))

        baseline = argmax_for(1.0)
        for scale in (0.25, 2.0, 7.5):
            assert argmax_for(scale) == baseline
