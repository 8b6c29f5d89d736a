"""Speaker separation behind a pluggable backend, plus cross-chunk linking.

A separation backend turns one mixed audio chunk into per-speaker streams
(encode -> separate -> decode, from the backend's point of view). Real
models run as external processes; two deterministic mocks ship for
desk-scale testing:

* ``passthrough``: returns the chunk unchanged as a single stream.
* ``bandsplit``: splits the spectrum at a cutoff frequency into a low
  and a high band, a stand-in for two speakers with known ground truth.

Because chunks are separated independently, local speaker indices are not
comparable across chunks; :func:`link_speakers` assigns consistent global
labels by matching energy-profile signatures between adjacent chunks.
"""

from __future__ import annotations

import itertools
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft

from . import audioio, dsp
from .backends import BackendDescriptor, BackendError, run_external
from .corpus import AudioChunk

BANDSPLIT_CUTOFF_HZ = 660.0  # between typical fixture tones at 440 and 880 Hz
SILENCE_ENERGY = 1e-12  # mean-square floor below which a stream is dropped


@dataclass(frozen=True)
class SeparationBackendDescriptor(BackendDescriptor):
    """Separation backend handle; built-in mocks are named, external
    backends carry a command template with {input} {outdir} {max_speakers}."""

    max_speakers: int = 2

    def __post_init__(self) -> None:
        if self.max_speakers < 1:
            raise ValueError("max_speakers must be >= 1")


PASSTHROUGH = SeparationBackendDescriptor(name="passthrough", max_speakers=1)
BANDSPLIT = SeparationBackendDescriptor(name="bandsplit", max_speakers=2)


@dataclass
class SpeakerStream:
    """One separated speaker signal within a chunk."""

    chunk_ref: tuple[str, int]  # (asset_id, chunk index)
    local_speaker: int
    samples: np.ndarray
    energy: float  # mean squared amplitude
    chunk_start: float
    chunk_end: float
    sample_rate: int = audioio.CANONICAL_RATE
    global_speaker: int | None = None

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class SpeakerLinkage:
    """Per-chunk map of local speaker indices to incident-level labels."""

    mapping: dict[int, dict[int, int]] = field(default_factory=dict)
    confidence: dict[int, dict[int, float]] = field(default_factory=dict)

    def resolve(self, chunk_index: int, local_speaker: int) -> int:
        return self.mapping.get(chunk_index, {}).get(local_speaker, local_speaker)


def _streams_from(chunk: AudioChunk, parts: list[np.ndarray]) -> list[SpeakerStream]:
    """Build energy-ordered streams, dropping near-silent bands.

    Falls back to a single silent stream when every band is silent, so a
    degenerate chunk still yields one stream rather than zero.
    """
    scored = [(dsp.mean_square(p), i, p) for i, p in enumerate(parts)]
    voiced = [(e, i, p) for e, i, p in scored if e > SILENCE_ENERGY]
    if not voiced:
        voiced = [max(scored, key=lambda t: t[0])] if scored else []
    # descending energy; original band order breaks exact ties
    voiced.sort(key=lambda t: (-t[0], t[1]))
    return [
        SpeakerStream(
            chunk_ref=(chunk.asset_id, chunk.index),
            local_speaker=rank,
            samples=np.asarray(p, dtype=np.float32),
            energy=e,
            chunk_start=chunk.start,
            chunk_end=chunk.end,
            sample_rate=chunk.sample_rate,
        )
        for rank, (e, _, p) in enumerate(voiced)
    ]


def _separate_passthrough(chunk: AudioChunk) -> list[SpeakerStream]:
    return _streams_from(chunk, [chunk.samples])


def _separate_bandsplit(chunk: AudioChunk, max_speakers: int) -> list[SpeakerStream]:
    if max_speakers < 2:
        return _separate_passthrough(chunk)
    samples = np.asarray(chunk.samples, dtype=np.float32)
    spectrum = scipy.fft.rfft(samples)
    freqs = scipy.fft.rfftfreq(len(samples), d=1.0 / chunk.sample_rate)
    n = len(samples)
    spectrum[freqs >= BANDSPLIT_CUTOFF_HZ] = 0
    low = scipy.fft.irfft(spectrum, n=n).astype(np.float32)
    # the bands partition the spectrum, so the high band is the residual
    high = samples - low
    return _streams_from(chunk, [low, high])


def _separate_external(
    chunk: AudioChunk, backend: SeparationBackendDescriptor
) -> list[SpeakerStream]:
    chunk_ref = (chunk.asset_id, chunk.index)
    with tempfile.TemporaryDirectory(prefix="bwckit-sep-") as tmp:
        tmpdir = Path(tmp)
        wav_path = tmpdir / "chunk.wav"
        outdir = tmpdir / "out"
        outdir.mkdir()
        audioio.write_wav(wav_path, chunk.samples, chunk.sample_rate)
        run_external(
            backend,
            {
                "input": str(wav_path),
                "outdir": str(outdir),
                "max_speakers": str(backend.max_speakers),
            },
            chunk_ref=chunk_ref,
        )
        manifest = outdir / "streams.tsv"
        if not manifest.exists():
            raise BackendError(f"backend {backend.name} wrote no stream manifest")
        parts: list[np.ndarray] = []
        for line in manifest.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            _, _, filename = line.split("\t")
            samples, _, _ = audioio.read_wav(outdir / filename)
            parts.append(audioio.downmix(samples))
        return _streams_from(chunk, parts)


def separate(chunk: AudioChunk, backend: SeparationBackendDescriptor) -> list[SpeakerStream]:
    """Separate one chunk into 1..max_speakers streams, highest energy first."""
    if len(chunk.samples) == 0:
        raise ValueError("cannot separate an empty chunk")
    if backend.is_external:
        streams = _separate_external(chunk, backend)
    elif backend.name == "passthrough":
        streams = _separate_passthrough(chunk)
    elif backend.name == "bandsplit":
        streams = _separate_bandsplit(chunk, backend.max_speakers)
    else:
        raise BackendError(f"unknown built-in separation backend {backend.name!r}")

    if not streams:
        raise BackendError("separation produced nothing")
    return streams[: backend.max_speakers]


def signature(stream: SpeakerStream) -> tuple[float, float, float]:
    """Model-free per-stream signature: (RMS energy, zero-crossing rate,
    spectral centroid), used to match speakers across chunk boundaries.

    RMS comes from the stream's stored mean-square energy, which was
    computed over the same samples.
    """
    return (
        math.sqrt(stream.energy),
        dsp.zero_crossing_rate(stream.samples),
        dsp.spectral_centroid(stream.samples, stream.sample_rate),
    )


def _distance(a: tuple[float, float, float], b: tuple[float, float, float]) -> float:
    return math.dist(a, b)


def _best_assignment(
    costs: list[list[float]], prev_globals: list[int], next_fresh: int
) -> list[int]:
    """Minimum-cost injective assignment of locals to previous globals.

    Locals beyond the previous speaker count receive fresh labels. Exact
    cost ties fall back to the lexicographically smallest assignment,
    which is local index order.
    """
    k = len(costs)
    m = len(prev_globals)
    r = min(k, m)
    best: tuple[float, list[int]] | None = None
    for kept in itertools.combinations(range(k), r):
        for perm in itertools.permutations(range(m), r):
            total = sum(costs[local][prev] for local, prev in zip(kept, perm))
            assigned = {local: prev_globals[prev] for local, prev in zip(kept, perm)}
            fresh = next_fresh
            labels = []
            for local in range(k):
                if local in assigned:
                    labels.append(assigned[local])
                else:
                    labels.append(fresh)
                    fresh += 1
            candidate = (total, labels)
            if best is None or candidate[0] < best[0] - 1e-12 or (
                abs(candidate[0] - best[0]) <= 1e-12 and labels < best[1]
            ):
                best = candidate
    assert best is not None
    return best[1]


def link_speakers(
    streams_by_chunk: list[list[SpeakerStream]], method: str = "signature"
) -> SpeakerLinkage:
    """Assign a global speaker label to every stream.

    ``signature`` (default) matches adjacent chunks by nearest signature;
    ``index`` keeps local indices as global labels. Always total: every
    stream is labeled, with a per-link confidence in [0, 1].
    """
    if method not in {"signature", "index"}:
        raise ValueError(f"unknown linkage method {method!r}")

    linkage = SpeakerLinkage()
    prev: list[tuple[int, tuple[float, float, float]]] = []  # (global, signature)
    next_fresh = 0

    for streams in streams_by_chunk:
        if not streams:
            continue
        chunk_index = streams[0].chunk_ref[1]
        sigs = [signature(s) for s in streams]
        if method == "index" or not prev:
            labels = list(range(len(streams)))
            confs = [1.0] * len(streams)
            next_fresh = max(next_fresh, len(streams))
        else:
            prev_globals = [g for g, _ in prev]
            costs = [[_distance(sig, psig) for _, psig in prev] for sig in sigs]
            labels = _best_assignment(costs, prev_globals, next_fresh)
            confs = []
            for local, label in enumerate(labels):
                if label not in prev_globals:
                    confs.append(1.0)  # fresh speaker, nothing to confuse it with
                    continue
                d = costs[local][prev_globals.index(label)]
                others = [c for j, c in enumerate(costs[local]) if prev_globals[j] != label]
                if not others:
                    confs.append(1.0 if d == 0 else 1.0 / (1.0 + d))
                    continue
                d2 = min(others)
                denom = d + d2
                confs.append(0.0 if denom == 0 else max(0.0, min(1.0, (d2 - d) / denom)))
            next_fresh = max(next_fresh, max(labels) + 1)

        linkage.mapping[chunk_index] = dict(enumerate(labels))
        linkage.confidence[chunk_index] = dict(enumerate(confs))
        for s, label in zip(streams, labels):
            s.global_speaker = label
        prev = list(zip(labels, sigs))

    return linkage
