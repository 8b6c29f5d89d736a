"""Modality feature extraction and weighted ensemble fusion.

Each modality produces a fixed-length feature vector through a chain of
named extractor stages; the three vectors are fused component-wise as

    alpha * audio + beta * text + gamma * image

Weight calibration is an exhaustive simplex grid search maximizing
nearest-centroid classification accuracy over labeled examples. There is
no gradient training here: the grid is small enough to verify every
candidate against an independent re-evaluation, and that property is what
the test suite leans on. The image modality ships as a zero-vector stub
behind the same interface, so its weight is calibratable but inert until
real frame features exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dsp
from .corpus import AudioTrack, VideoAsset
from .lexicon import Lexicon, LexiconError, aggregate_hit_rates
from .quality import tokenize
from .separation import SpeakerStream
from .transcription import ROLE_CIVILIAN, ROLE_OFFICER, MergedTranscript


@dataclass(frozen=True)
class FusionConfig:
    fusion_length: int = 12
    energy_frames: int = 8
    speaker_slots: int = 4
    image_length: int = 8


DEFAULT_CONFIG = FusionConfig()


@dataclass(frozen=True)
class FeatureVector:
    modality: str  # audio | text | image
    values: tuple[float, ...]
    extractor_chain: tuple[str, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not all(np.isfinite(v) for v in self.values):
            raise ValueError(f"{self.modality} feature vector contains non-finite values")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class EnsembleWeights:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("ensemble weights must be non-negative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)

    def normalized(self) -> "EnsembleWeights":
        """Scale onto the simplex with an exactly-1.0 float sum.

        gamma is recomputed as the complement of alpha + beta, which
        makes the left-to-right float sum land on 1.0 exactly; the
        cascade below keeps every component non-negative when the
        rounded partial sums overshoot.
        """
        total = self.alpha + self.beta + self.gamma
        if total <= 0:
            raise ValueError("weights must have positive mass")
        a, b = self.alpha / total, self.beta / total
        g = 1.0 - (a + b)
        if g < 0.0:
            g = 0.0
            b = 1.0 - a
            if b < 0.0:
                b, a = 0.0, 1.0
        return EnsembleWeights(a, b, g)


@dataclass(frozen=True)
class LabeledExample:
    audio: FeatureVector
    text: FeatureVector
    image: FeatureVector
    label: str


@dataclass
class StageContext:
    config: FusionConfig
    streams: list[SpeakerStream] = field(default_factory=list)


def _stage_frame_energy(track: AudioTrack, ctx: StageContext) -> np.ndarray:
    return dsp.frame_energies(track.samples, ctx.config.energy_frames)


def _stage_zcr(track: AudioTrack, ctx: StageContext) -> np.ndarray:
    return np.array([dsp.zero_crossing_rate(track.samples)])


def _stage_centroid(track: AudioTrack, ctx: StageContext) -> np.ndarray:
    return np.array([dsp.spectral_centroid(track.samples, track.sample_rate)])


def _stage_speaker_share(track: AudioTrack, ctx: StageContext) -> np.ndarray:
    """Per-global-speaker share of total stream energy, padded to a fixed width."""
    out = np.zeros(ctx.config.speaker_slots)
    totals: dict[int, float] = {}
    for s in ctx.streams:
        if s.global_speaker is not None:
            totals[s.global_speaker] = totals.get(s.global_speaker, 0.0) + s.energy * s.duration
    grand = sum(totals.values())
    if grand > 0:
        for slot, speaker in enumerate(sorted(totals)[: ctx.config.speaker_slots]):
            out[slot] = totals[speaker] / grand
    return out


def _stage_identity(track: AudioTrack, ctx: StageContext) -> np.ndarray:
    return np.array([dsp.rms(track.samples)])


AUDIO_STAGES: dict[str, Callable[[AudioTrack, StageContext], np.ndarray]] = {
    "frame-energy": _stage_frame_energy,
    "zero-crossing-rate": _stage_zcr,
    "spectral-centroid": _stage_centroid,
    "speaker-energy-share": _stage_speaker_share,
    "identity": _stage_identity,
}

DEFAULT_AUDIO_CHAIN = ("frame-energy", "zero-crossing-rate", "spectral-centroid", "speaker-energy-share")


def extract_audio_features(
    track: AudioTrack,
    chain: tuple[str, ...] = DEFAULT_AUDIO_CHAIN,
    streams: list[SpeakerStream] | None = None,
    config: FusionConfig = DEFAULT_CONFIG,
) -> FeatureVector:
    """Apply named stages left to right and concatenate their outputs."""
    if not chain:
        raise ValueError("audio stage chain must be non-empty")
    unknown = [name for name in chain if name not in AUDIO_STAGES]
    if unknown:
        raise ValueError(f"unknown audio stages: {', '.join(unknown)}")
    ctx = StageContext(config=config, streams=streams or [])
    parts = [AUDIO_STAGES[name](track, ctx) for name in chain]
    values = np.concatenate(parts) if parts else np.zeros(0)
    return FeatureVector(modality="audio", values=tuple(float(v) for v in values), extractor_chain=tuple(chain))


def extract_text_features(
    transcript: MergedTranscript,
    lexicon: Lexicon,
    config: FusionConfig = DEFAULT_CONFIG,
) -> FeatureVector:
    """Per-role, per-category lexicon hit rates in lexicon order.

    Component order is role-major (officer block then civilian block),
    category order as the lexicon file lists them; values are in [0, 1].
    Phrases match within segments only, so segment order never changes
    the rates.
    """
    if not transcript.segments:
        raise ValueError("cannot extract text features from an empty transcript")
    if not lexicon:
        raise LexiconError("empty lexicon")

    role_groups: dict[str, list[tuple[str, ...]]] = {ROLE_OFFICER: [], ROLE_CIVILIAN: []}
    for seg in transcript.segments:
        role = transcript.roles.get(seg.global_speaker, "")
        if role in role_groups:
            role_groups[role].append(tokenize(seg.text).tokens)

    values: list[float] = []
    names: list[str] = []
    for role in (ROLE_OFFICER, ROLE_CIVILIAN):
        rates = aggregate_hit_rates(role_groups[role], lexicon)
        for category, rate in rates.items():
            values.append(rate)
            names.append(f"{role}:{category}")
    return FeatureVector(
        modality="text",
        values=tuple(values),
        extractor_chain=("lexicon-rates",),
        names=tuple(names),
    )


def extract_image_features(
    asset: VideoAsset, config: FusionConfig = DEFAULT_CONFIG
) -> FeatureVector:
    """Zero-vector stub; the interface slot for future frame analysis."""
    return FeatureVector(
        modality="image",
        values=tuple(0.0 for _ in range(config.image_length)),
        extractor_chain=("image-stub",),
    )


def _project(values: np.ndarray, length: int) -> np.ndarray:
    """Truncate or zero-pad to the fusion length."""
    if len(values) >= length:
        return values[:length]
    return np.concatenate([values, np.zeros(length - len(values))])


def fuse(
    audio: FeatureVector,
    text: FeatureVector,
    image: FeatureVector,
    weights: EnsembleWeights,
    config: FusionConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Component-wise weighted sum of the three modality vectors.

    Linear in the weights; callers wanting simplex weights normalize
    first.
    """
    vecs = []
    for fv in (audio, text, image):
        arr = fv.as_array()
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {fv.modality} features")
        vecs.append(_project(arr, config.fusion_length))
    return weights.alpha * vecs[0] + weights.beta * vecs[1] + weights.gamma * vecs[2]


def simplex_grid(grid_step: float) -> list[EnsembleWeights]:
    """All weight triples with components that are multiples of grid_step
    summing to 1, in ascending lexicographic (alpha, beta, gamma) order."""
    if not 0 < grid_step <= 0.5:
        raise ValueError("grid_step must be in (0, 0.5]")
    n = round(1.0 / grid_step)
    if abs(n * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must evenly divide 1")
    grid = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            grid.append(EnsembleWeights(i / n, j / n, (n - i - j) / n).normalized())
    return grid


def nearest_centroid_accuracy(
    examples: list[LabeledExample],
    weights: EnsembleWeights,
    config: FusionConfig = DEFAULT_CONFIG,
) -> float:
    """Fraction of examples whose fused vector lands nearest its own
    class centroid. Distance ties resolve to the first label in sorted
    order."""
    fused = [fuse(ex.audio, ex.text, ex.image, weights, config) for ex in examples]
    labels = sorted({ex.label for ex in examples})
    centroids = {
        label: np.mean([f for f, ex in zip(fused, examples) if ex.label == label], axis=0)
        for label in labels
    }
    correct = 0
    for vec, ex in zip(fused, examples):
        dists = [float(np.linalg.norm(vec - centroids[label])) for label in labels]
        predicted = labels[int(np.argmin(dists))]
        correct += predicted == ex.label
    return correct / len(examples)


def calibrate_weights(
    examples: list[LabeledExample],
    grid_step: float = 0.1,
    config: FusionConfig = DEFAULT_CONFIG,
) -> EnsembleWeights:
    """Exhaustive simplex grid search for the accuracy-maximizing weights.

    Deterministic: ties break to the lexicographically smallest
    (alpha, beta, gamma).
    """
    if not examples:
        raise ValueError("cannot calibrate on an empty example set")
    if len({ex.label for ex in examples}) < 2:
        raise ValueError("degenerate labels: calibration needs at least two classes")

    best_weights: EnsembleWeights | None = None
    best_accuracy = -1.0
    for weights in simplex_grid(grid_step):
        accuracy = nearest_centroid_accuracy(examples, weights, config)
        if accuracy > best_accuracy:
            best_weights = weights
            best_accuracy = accuracy
    assert best_weights is not None
    return best_weights
