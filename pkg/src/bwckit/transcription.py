"""Per-speaker transcription, transcript merging, and role attribution.

Transcription backends follow the same process-boundary contract as
separation. The built-in ``sidecar`` mock reads ground-truth utterances
from a fixture file, which makes end-to-end tests exact: whatever the
fixture generator wrote is what the pipeline must reproduce.

Merged transcripts are canonical: segments sorted by (start, speaker),
stable under any input permutation, with roles attributed by a
deterministic energy heuristic that human review can override.
"""

from __future__ import annotations

import json
import logging
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import audioio
from .backends import BackendDescriptor, BackendError, run_external
from .separation import SILENCE_ENERGY, SpeakerLinkage, SpeakerStream

logger = logging.getLogger(__name__)

ROLE_OFFICER = "officer"
ROLE_CIVILIAN = "civilian"
ROLE_UNKNOWN = "unknown"

TRUTH_FILENAME = "transcripts.jsonl"


@dataclass(frozen=True)
class TranscriptionBackendDescriptor(BackendDescriptor):
    """Transcription backend handle.

    Built-in mock: name ``sidecar`` with ``truth_dir`` pointing at a
    directory containing ``transcripts.jsonl`` rows of
    {asset, chunk, speaker, start, end, text} with chunk-local times.
    External template placeholders: {input} {output}.
    """

    truth_dir: str | None = None


@dataclass(frozen=True)
class TranscriptSegment:
    """One timestamped utterance by one speaker."""

    asset_id: str
    chunk_index: int
    local_speaker: int
    start: float  # absolute seconds within the track
    end: float
    text: str
    backend_name: str
    global_speaker: int | None = None

    def to_record(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "chunk": self.chunk_index,
            "speaker": self.global_speaker if self.global_speaker is not None else self.local_speaker,
            "local_speaker": self.local_speaker,
            "start_s": self.start,
            "end_s": self.end,
            "text": self.text,
            "backend": self.backend_name,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TranscriptSegment":
        return cls(
            asset_id=rec["asset_id"],
            chunk_index=int(rec["chunk"]),
            local_speaker=int(rec.get("local_speaker", rec["speaker"])),
            start=float(rec["start_s"]),
            end=float(rec["end_s"]),
            text=rec["text"],
            backend_name=rec.get("backend", ""),
            global_speaker=rec.get("speaker"),
        )


@dataclass
class MergedTranscript:
    """The time-ordered, role-attributed dialogue for one asset."""

    asset_id: str
    segments: list[TranscriptSegment] = field(default_factory=list)
    roles: dict[int, str] = field(default_factory=dict)
    revision: int = 0
    correction_log: list[list[str]] = field(default_factory=list)  # applied batches
    role_overrides: set[int] = field(default_factory=set)  # human-set, heuristic must not touch

    def speakers(self) -> list[int]:
        return sorted({s.global_speaker for s in self.segments if s.global_speaker is not None})

    def to_doc(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "revision": self.revision,
            "roles": {str(k): v for k, v in self.roles.items()},
            "role_overrides": sorted(self.role_overrides),
            "correction_log": self.correction_log,
            "segments": [s.to_record() for s in self.segments],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "MergedTranscript":
        return cls(
            asset_id=doc["asset_id"],
            segments=[TranscriptSegment.from_record(r) for r in doc["segments"]],
            roles={int(k): v for k, v in doc["roles"].items()},
            revision=int(doc["revision"]),
            correction_log=[list(batch) for batch in doc.get("correction_log", [])],
            role_overrides=set(doc.get("role_overrides", [])),
        )


class _SidecarTruth:
    """Lazy per-directory cache of fixture ground-truth utterances."""

    _cache: dict[str, dict[tuple[str, int, int], list[dict]]] = {}

    @classmethod
    def lookup(cls, truth_dir: str, asset_id: str, chunk: int, speaker: int) -> list[dict]:
        table = cls._cache.get(truth_dir)
        if table is None:
            table = {}
            path = Path(truth_dir) / TRUTH_FILENAME
            if path.exists():
                for line in path.read_text(encoding="utf-8").splitlines():
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    key = (row["asset"], int(row["chunk"]), int(row["speaker"]))
                    table.setdefault(key, []).append(row)
            cls._cache[truth_dir] = table
        return table.get((asset_id, chunk, speaker), [])

    @classmethod
    def invalidate(cls) -> None:
        cls._cache.clear()


def _segments_from_rows(
    stream: SpeakerStream, rows: list[dict], backend_name: str
) -> list[TranscriptSegment]:
    asset_id, chunk_index = stream.chunk_ref
    segments = []
    for row in rows:
        start = stream.chunk_start + float(row["start"])
        end = stream.chunk_start + float(row["end"])
        if not (stream.chunk_start <= start < end <= stream.chunk_end + 1e-9):
            raise BackendError(
                f"backend {backend_name} emitted a segment outside its chunk window: "
                f"{start:.3f}-{end:.3f} not in [{stream.chunk_start:.3f}, {stream.chunk_end:.3f}]"
            )
        segments.append(
            TranscriptSegment(
                asset_id=asset_id,
                chunk_index=chunk_index,
                local_speaker=stream.local_speaker,
                global_speaker=stream.global_speaker,
                start=start,
                end=end,
                text=row["text"],
                backend_name=backend_name,
            )
        )
    return segments


def transcribe(
    stream: SpeakerStream, backend: TranscriptionBackendDescriptor
) -> list[TranscriptSegment]:
    """Transcribe one speaker stream into absolute-timestamped segments.

    Silence (or a stream the backend has nothing for) yields an empty
    list, not an error.
    """
    asset_id, chunk_index = stream.chunk_ref
    if backend.is_external:
        with tempfile.TemporaryDirectory(prefix="bwckit-asr-") as tmp:
            wav_path = Path(tmp) / "stream.wav"
            out_path = Path(tmp) / "segments.jsonl"
            audioio.write_wav(wav_path, stream.samples, stream.sample_rate)
            run_external(
                backend,
                {"input": str(wav_path), "output": str(out_path)},
                chunk_ref=stream.chunk_ref,
            )
            rows = []
            if out_path.exists():
                for line in out_path.read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        rows.append(json.loads(line))
            return _segments_from_rows(stream, rows, backend.name)

    if backend.name != "sidecar":
        raise BackendError(f"unknown built-in transcription backend {backend.name!r}")
    if backend.truth_dir is None:
        raise BackendError("sidecar backend needs a truth_dir")
    if stream.energy <= SILENCE_ENERGY:
        return []
    rows = _SidecarTruth.lookup(backend.truth_dir, asset_id, chunk_index, stream.local_speaker)
    return _segments_from_rows(stream, rows, backend.name)


def _canonical_key(seg: TranscriptSegment):
    return (seg.start, seg.global_speaker, seg.end, seg.text, seg.chunk_index, seg.local_speaker)


def merge_transcripts(
    segments: list[TranscriptSegment],
    linkage: SpeakerLinkage | None = None,
    asset_id: str | None = None,
) -> MergedTranscript:
    """Merge per-stream segments into one canonical transcript.

    Segments are re-labeled to global speakers through the linkage (those
    already carrying a global label keep it), then sorted by
    (start, speaker). The result is identical for every permutation of the
    input. Roles start as unknown; revision starts at 0.
    """
    ids = {s.asset_id for s in segments}
    if len(ids) > 1:
        raise ValueError(f"segments span multiple assets: {sorted(ids)}")
    if segments:
        asset_id = next(iter(ids))
    elif asset_id is None:
        asset_id = ""

    relabeled = []
    for seg in segments:
        if seg.global_speaker is None:
            label = (
                linkage.resolve(seg.chunk_index, seg.local_speaker)
                if linkage is not None
                else seg.local_speaker
            )
            seg = replace(seg, global_speaker=label)
        relabeled.append(seg)
    relabeled.sort(key=_canonical_key)

    roles = {spk: ROLE_UNKNOWN for spk in sorted({s.global_speaker for s in relabeled})}
    return MergedTranscript(asset_id=asset_id, segments=relabeled, roles=roles, revision=0)


def attribute_roles(
    transcript: MergedTranscript, streams: list[SpeakerStream]
) -> MergedTranscript:
    """Label the dominant speaker (by energy x speaking time) as officer.

    The body-worn microphone sits on the officer, so the loudest sustained
    voice is the default officer guess; everyone else is civilian. Exact
    ties go to the lower speaker label. Speakers whose role was set by a
    human reviewer are left untouched.
    """
    weights: dict[int, float] = {}
    for stream in streams:
        if stream.global_speaker is None:
            continue
        weights.setdefault(stream.global_speaker, 0.0)
        weights[stream.global_speaker] += stream.energy * stream.duration

    roles = dict(transcript.roles)
    candidates = [spk for spk in roles if spk not in transcript.role_overrides]
    if candidates:
        best = max(candidates, key=lambda spk: (weights.get(spk, 0.0), -spk))
        tied = [s for s in candidates if weights.get(s, 0.0) == weights.get(best, 0.0)]
        if len(tied) > 1:
            logger.info(
                "role attribution tie between speakers %s on %s; picking %s",
                tied, transcript.asset_id, best,
            )
        for spk in candidates:
            roles[spk] = ROLE_OFFICER if spk == best else ROLE_CIVILIAN
    return replace(transcript, roles=roles)


def segments_to_jsonl(segments: list[TranscriptSegment], path: str | Path) -> None:
    """One segment per line: asset_id, chunk, speaker, start_s, end_s, text, backend."""
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(json.dumps(seg.to_record(), ensure_ascii=False) + "\n")


def segments_from_jsonl(path: str | Path) -> list[TranscriptSegment]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(TranscriptSegment.from_record(json.loads(line)))
    return out
