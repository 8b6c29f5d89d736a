"""Dataset ingestion: directory scanning, audio extraction, chunking, stats.

A corpus is a directory of media assets. Scanning builds a manifest of
:class:`VideoAsset` records with durations probed from container metadata;
extraction converts an asset's audio to the canonical mono 16 kHz form;
splitting cuts a track into fixed-length chunks with optional overlap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import audioio
from .audioio import AudioFormatError, CANONICAL_RATE

MEDIA_EXTENSIONS = {".wav", ".mp4", ".mov", ".mkv", ".avi", ".m4a"}

DEFAULT_CHUNK_LEN = 30.0  # seconds; 15 s chunks fragment conversations too much
DEFAULT_OVERLAP = 0.0

FLAG_PROBE_FAILED = "probe-failed"
FLAG_UNSUPPORTED = "unsupported-container"


class EmptyDatasetError(ValueError):
    """Raised when statistics are requested over an empty manifest."""


class SilentAssetError(ValueError):
    """Raised when an asset has no audio stream to extract."""


@dataclass(frozen=True)
class VideoAsset:
    """One media file in the corpus manifest."""

    id: str
    path: str
    duration: float  # seconds; 0.0 when probing failed (see flags)
    incident_ref: str | None = None
    flags: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "path": self.path,
            "duration_s": self.duration,
            "incident_ref": self.incident_ref,
            "flags": list(self.flags),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "VideoAsset":
        return cls(
            id=rec["id"],
            path=rec["path"],
            duration=float(rec["duration_s"]),
            incident_ref=rec.get("incident_ref"),
            flags=tuple(rec.get("flags") or ()),
        )


@dataclass
class AudioTrack:
    """A mono audio stream extracted from one asset."""

    asset_id: str
    sample_rate: int
    channels: int
    samples: np.ndarray  # float32 in [-1, 1)

    @property
    def duration(self) -> float:
        return len(self.samples) / (self.sample_rate * self.channels)


@dataclass
class AudioChunk:
    """A contiguous fixed-length slice of a track."""

    asset_id: str
    index: int
    start: float
    end: float
    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DatasetSummary:
    total_videos: int
    shortest: float
    longest: float
    mean_length: float
    total_time: float


_PROBERS = {
    ".wav": audioio.probe_wav_duration,
    ".mp4": audioio.probe_mp4_duration,
    ".mov": audioio.probe_mp4_duration,
    ".m4a": audioio.probe_mp4_duration,
}


def _sidecar_incident_ref(path: Path) -> str | None:
    meta = path.with_name(path.name + ".meta.json")
    if not meta.exists():
        return None
    try:
        return json.loads(meta.read_text(encoding="utf-8")).get("incident_ref")
    except (OSError, json.JSONDecodeError):
        return None


def scan_dataset(root: str | Path) -> list[VideoAsset]:
    """Scan a directory tree for media files and build a manifest.

    Ordering is lexicographic by relative path, so repeated scans of an
    unchanged tree are identical. A file whose duration cannot be probed
    is kept in the manifest with a diagnostic flag rather than aborting
    the scan.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a readable directory")

    assets: list[VideoAsset] = []
    paths = sorted(
        (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in MEDIA_EXTENSIONS),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    for path in paths:
        rel = path.relative_to(root).as_posix()
        flags: tuple[str, ...] = ()
        duration = 0.0
        prober = _PROBERS.get(path.suffix.lower())
        if prober is None:
            flags = (FLAG_UNSUPPORTED,)
        else:
            try:
                duration = prober(path)
            except AudioFormatError:
                flags = (FLAG_PROBE_FAILED,)
        assets.append(
            VideoAsset(
                id=rel,
                path=str(path),
                duration=duration,
                incident_ref=_sidecar_incident_ref(path),
                flags=flags,
            )
        )
    return assets


def dataset_stats(manifest: list[VideoAsset]) -> DatasetSummary:
    """Min/max/mean/total duration over a manifest (order-independent)."""
    if not manifest:
        raise EmptyDatasetError("empty dataset")
    durations = [a.duration for a in manifest]
    return DatasetSummary(
        total_videos=len(manifest),
        shortest=min(durations),
        longest=max(durations),
        mean_length=sum(durations) / len(durations),
        total_time=sum(durations),
    )


def format_hms(seconds: float) -> str:
    """Render seconds as H:MM:SS with unbounded, zero-padded hours."""
    total = int(round(seconds))
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def format_summary(summary: DatasetSummary) -> str:
    """A dataset-summary table block for CLI output."""
    rows = [
        ("Total Videos", f"{summary.total_videos:,}"),
        ("Shortest Video", format_hms(summary.shortest)),
        ("Longest Video", format_hms(summary.longest)),
        ("Average Video Length", format_hms(summary.mean_length)),
        ("Total Video Time", format_hms(summary.total_time)),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def extract_audio(asset: VideoAsset) -> AudioTrack:
    """Extract the asset's audio as a canonical mono 16 kHz track.

    Sources already in canonical form pass through bit-identically;
    anything else is down-mixed and resampled.
    """
    path = Path(asset.path)
    if path.suffix.lower() != ".wav":
        raise AudioFormatError(
            f"audio extraction supports RIFF/WAV sources, got {path.suffix} "
            "(decode other containers to WAV at ingestion time)"
        )
    samples, rate, channels = audioio.read_wav(path)
    if samples.size == 0:
        raise SilentAssetError(f"silent asset: {asset.id} has no audio stream")
    mono = audioio.downmix(samples)
    mono = audioio.resample(mono, rate, CANONICAL_RATE)
    return AudioTrack(asset_id=asset.id, sample_rate=CANONICAL_RATE, channels=1, samples=mono)


def split_audio(
    track: AudioTrack,
    chunk_len: float = DEFAULT_CHUNK_LEN,
    overlap: float = DEFAULT_OVERLAP,
) -> list[AudioChunk]:
    """Cut a track into chunks of at most ``chunk_len`` seconds.

    Chunk boundaries are sample-exact. With overlap 0 the chunks tile the
    track: concatenating their sample arrays reproduces the track, and the
    final chunk holds the remainder. With overlap > 0 consecutive starts
    advance by ``chunk_len - overlap``.
    """
    if chunk_len <= 0:
        raise ValueError("chunk_len must be positive")
    if not 0 <= overlap < chunk_len:
        raise ValueError("overlap must satisfy 0 <= overlap < chunk_len")
    n = len(track.samples)
    if n < 1:
        raise ValueError("track shorter than one sample")

    rate = track.sample_rate
    len_samples = int(round(chunk_len * rate))
    stride_samples = int(round((chunk_len - overlap) * rate))
    if stride_samples < 1:
        raise ValueError("overlap too close to chunk_len for this sample rate")

    chunks: list[AudioChunk] = []
    index = 0
    pos = 0
    while pos < n:
        stop = min(pos + len_samples, n)
        chunks.append(
            AudioChunk(
                asset_id=track.asset_id,
                index=index,
                start=pos / rate,
                end=stop / rate,
                samples=track.samples[pos:stop],
                sample_rate=rate,
            )
        )
        if stop >= n:
            break
        pos += stride_samples
        index += 1
    return chunks


def save_manifest(manifest: list[VideoAsset], path: str | Path) -> None:
    """Persist a manifest as line-delimited JSON, one asset per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for asset in manifest:
            fh.write(json.dumps(asset.to_record(), ensure_ascii=False) + "\n")


def load_manifest(path: str | Path) -> list[VideoAsset]:
    assets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                assets.append(VideoAsset.from_record(json.loads(line)))
    return assets
