import numpy as np
import pytest

from bwckit import dsp, separation
from bwckit.backends import RetryableBackendError
from bwckit.corpus import AudioChunk

import synth


def _chunk(samples, asset_id="asset", index=0, rate=16000):
    samples = np.asarray(samples, dtype=np.float32)
    return AudioChunk(
        asset_id=asset_id,
        index=index,
        start=index * 30.0,
        end=index * 30.0 + len(samples) / rate,
        samples=samples,
        sample_rate=rate,
    )


class TestMockBackends:
    def test_passthrough_identity(self):
        chunk = _chunk(synth.tone(440, 1.0, 0.5))
        (stream,) = separation.separate(chunk, separation.PASSTHROUGH)
        assert stream.samples.tobytes() == chunk.samples.tobytes()
        assert stream.local_speaker == 0
        assert stream.chunk_ref == ("asset", 0)

    def test_bandsplit_two_tone_halves(self):
        """Each output stream's energy concentrates in its own time half."""
        samples = synth.two_tone_chunk_samples(duration_s=2.0)
        chunk = _chunk(samples)
        streams = separation.separate(chunk, separation.BANDSPLIT)
        assert len(streams) == 2
        half = len(samples) // 2
        # identify streams by centroid: low band held the first-half 440 Hz tone
        by_band = sorted(streams, key=lambda s: dsp.spectral_centroid(s.samples, 16000))
        low, high = by_band
        low_first = dsp.mean_square(low.samples[:half]) * half
        low_total = dsp.mean_square(low.samples) * len(low.samples)
        high_second = dsp.mean_square(high.samples[half:]) * (len(samples) - half)
        high_total = dsp.mean_square(high.samples) * len(high.samples)
        assert low_first / low_total > 0.9
        assert high_second / high_total > 0.9

    def test_silent_chunk_single_silent_stream(self):
        chunk = _chunk(np.zeros(16000))
        for backend in (separation.PASSTHROUGH, separation.BANDSPLIT):
            (stream,) = separation.separate(chunk, backend)
            assert stream.energy == 0.0
            assert len(stream.samples) == len(chunk.samples)

    def test_energy_conservation(self):
        samples = synth.two_tone_chunk_samples(duration_s=1.0)
        chunk = _chunk(samples)
        total = dsp.mean_square(chunk.samples)

        (p,) = separation.separate(chunk, separation.PASSTHROUGH)
        assert p.energy == total  # exact: same samples

        streams = separation.separate(chunk, separation.BANDSPLIT)
        recovered = sum(s.energy for s in streams)
        assert abs(recovered - total) / total < 0.05

    def test_deterministic(self):
        chunk = _chunk(synth.two_tone_chunk_samples())
        first = separation.separate(chunk, separation.BANDSPLIT)
        second = separation.separate(chunk, separation.BANDSPLIT)
        for a, b in zip(first, second):
            assert a.samples.tobytes() == b.samples.tobytes()
            assert a.energy == b.energy

    def test_energy_ordering_and_cap(self):
        chunk = _chunk(
            synth.tone(350, 1.0, 0.5) + synth.tone(1000, 1.0, 0.2)
        )
        streams = separation.separate(chunk, separation.BANDSPLIT)
        energies = [s.energy for s in streams]
        assert energies == sorted(energies, reverse=True)
        assert len(streams) <= separation.BANDSPLIT.max_speakers
        assert all(s.local_speaker < separation.BANDSPLIT.max_speakers for s in streams)

    def test_single_band_collapses_to_one_stream(self):
        chunk = _chunk(synth.tone(350, 1.0, 0.5))
        streams = separation.separate(chunk, separation.BANDSPLIT)
        assert len(streams) == 1

    def test_empty_chunk_rejected(self):
        with pytest.raises(ValueError):
            separation.separate(_chunk(np.zeros(0)), separation.PASSTHROUGH)


def _stream(samples, index, local, rate=16000):
    samples = np.asarray(samples, dtype=np.float32)
    return separation.SpeakerStream(
        chunk_ref=("asset", index),
        local_speaker=local,
        samples=samples,
        energy=dsp.mean_square(samples),
        chunk_start=index * 30.0,
        chunk_end=index * 30.0 + len(samples) / rate,
        sample_rate=rate,
    )


class TestLinkSpeakers:
    def test_single_chunk_identity(self):
        streams = [
            _stream(synth.tone(350, 1.0, 0.5), 0, 0),
            _stream(synth.tone(1000, 1.0, 0.25), 0, 1),
        ]
        linkage = separation.link_speakers([streams])
        assert linkage.mapping[0] == {0: 0, 1: 1}
        assert linkage.confidence[0] == {0: 1.0, 1: 1.0}
        assert [s.global_speaker for s in streams] == [0, 1]

    def test_swapped_signatures_follow_the_voice(self):
        chunk0 = [
            _stream(synth.tone(350, 1.0, 0.5), 0, 0),
            _stream(synth.tone(1000, 1.0, 0.25), 0, 1),
        ]
        # in the next chunk the high voice becomes the louder local 0
        chunk1 = [
            _stream(synth.tone(1000, 1.0, 0.5), 1, 0),
            _stream(synth.tone(350, 1.0, 0.25), 1, 1),
        ]
        linkage = separation.link_speakers([chunk0, chunk1])
        assert linkage.mapping[1] == {0: 1, 1: 0}
        assert chunk1[0].global_speaker == 1
        assert chunk1[1].global_speaker == 0

    def test_exact_tie_falls_back_to_index_order(self):
        samples = synth.tone(440, 1.0, 0.5)
        chunk0 = [_stream(samples, 0, 0), _stream(samples, 0, 1)]
        chunk1 = [_stream(samples, 1, 0), _stream(samples, 1, 1)]
        linkage = separation.link_speakers([chunk0, chunk1])
        assert linkage.mapping[1] == {0: 0, 1: 1}
        assert linkage.confidence[1][0] == 0.0  # maximal ambiguity is reported

    def test_new_speaker_gets_fresh_label(self):
        chunk0 = [_stream(synth.tone(350, 1.0, 0.5), 0, 0)]
        chunk1 = [
            _stream(synth.tone(350, 1.0, 0.5), 1, 0),
            _stream(synth.tone(1600, 1.0, 0.5), 1, 1),
        ]
        linkage = separation.link_speakers([chunk0, chunk1])
        assert linkage.mapping[1][0] == 0
        assert linkage.mapping[1][1] == 1  # fresh label, not a collision

    def test_mapping_total_and_injective(self):
        rng = np.random.default_rng(3)
        chunks = []
        for index in range(6):
            n = int(rng.integers(1, 4))
            chunks.append(
                [
                    _stream(synth.tone(float(rng.integers(200, 2000)), 0.5, 0.3), index, local)
                    for local in range(n)
                ]
            )
        linkage = separation.link_speakers(chunks)
        for index, streams in enumerate(chunks):
            mapped = [linkage.mapping[index][s.local_speaker] for s in streams]
            assert len(set(mapped)) == len(mapped)  # injective within the chunk
            assert all(
                0.0 <= linkage.confidence[index][s.local_speaker] <= 1.0 for s in streams
            )

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            separation.link_speakers([], method="oracle")


EXTERNAL_SEP_SCRIPT = """\
import shutil, sys
from pathlib import Path
inp, outdir = sys.argv[1], Path(sys.argv[2])
shutil.copy(inp, outdir / "s0.wav")
(outdir / "streams.tsv").write_text("0\\t0.1\\ts0.wav\\n")
"""


class TestExternalBackend:
    def test_external_passthrough(self, tmp_path):
        script = tmp_path / "sep.py"
        script.write_text(EXTERNAL_SEP_SCRIPT)
        backend = separation.SeparationBackendDescriptor(
            name="ext", invocation=f"python3 {script} {{input}} {{outdir}} {{max_speakers}}",
            max_speakers=2,
        )
        chunk = _chunk(synth.tone(440, 0.5, 0.5))
        (stream,) = separation.separate(chunk, backend)
        np.testing.assert_allclose(stream.samples, chunk.samples, atol=1 / 32768)

    def test_crash_is_retryable_with_chunk_ref(self, tmp_path):
        script = tmp_path / "crash.py"
        script.write_text("import sys; sys.exit(3)")
        backend = separation.SeparationBackendDescriptor(
            name="crash", invocation=f"python3 {script} {{input}} {{outdir}} {{max_speakers}}",
        )
        chunk = _chunk(synth.tone(440, 0.2, 0.5), asset_id="bad", index=7)
        with pytest.raises(RetryableBackendError) as err:
            separation.separate(chunk, backend)
        assert err.value.chunk_ref == ("bad", 7)

    def test_timeout_is_retryable(self, tmp_path):
        script = tmp_path / "slow.py"
        script.write_text("import time; time.sleep(5)")
        backend = separation.SeparationBackendDescriptor(
            name="slow", invocation=f"python3 {script} {{input}} {{outdir}} {{max_speakers}}",
            timeout_s=0.4,
        )
        with pytest.raises(RetryableBackendError):
            separation.separate(_chunk(synth.tone(440, 0.2, 0.5)), backend)
