"""The composed analysis run: ingest through stored insights, per asset.

Stage order per asset: extract audio, chunk, separate, link speakers,
transcribe, merge, attribute roles, summarize, score indicators, save.
Chunk-level backend failures are retried once (configurable) and then
quarantined so one noisy chunk cannot sink a long recording; asset-level
failures quarantine the asset. Completed assets are checkpointed in the
store under the config fingerprint, so an unchanged re-run makes zero
backend invocations.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import corpus, insights, separation, transcription
from .audioio import write_wav
from .backends import RetryableBackendError
from .config import RunConfig
from .lexicon import load_lexicon
from .store import IncidentStore

logger = logging.getLogger(__name__)

STAGE_COMPLETE = "complete"


@dataclass(frozen=True)
class StageFailure:
    asset_id: str
    stage: str
    error: str
    chunk_index: int | None = None

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "stage": self.stage,
            "error": self.error,
            "chunk_index": self.chunk_index,
        }


@dataclass
class PipelineRunReport:
    assets: int = 0
    chunks: int = 0
    streams: int = 0
    segments: int = 0
    saved: dict[str, str] = field(default_factory=dict)  # asset_id -> record key
    skipped: list[str] = field(default_factory=list)  # checkpointed assets
    failed_assets: list[str] = field(default_factory=list)
    failures: list[StageFailure] = field(default_factory=list)
    stage_seconds: dict[str, float] = field(default_factory=dict)
    backend_invocations: int = 0

    def to_dict(self) -> dict:
        return {
            "assets": self.assets,
            "chunks": self.chunks,
            "streams": self.streams,
            "segments": self.segments,
            "saved": self.saved,
            "skipped": self.skipped,
            "failed_assets": self.failed_assets,
            "failures": [f.to_dict() for f in self.failures],
            "stage_seconds": self.stage_seconds,
            "backend_invocations": self.backend_invocations,
        }


@dataclass
class _AssetResult:
    asset_id: str
    chunks: int = 0
    streams: int = 0
    segments: int = 0
    record_key: str | None = None
    skipped: bool = False
    failed: bool = False
    failures: list[StageFailure] = field(default_factory=list)
    stage_seconds: dict[str, float] = field(default_factory=dict)
    invocations: int = 0


class _StageTimer:
    def __init__(self, result: _AssetResult, stage: str):
        self.result = result
        self.stage = stage

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        elapsed = time.perf_counter() - self.t0
        self.result.stage_seconds[self.stage] = (
            self.result.stage_seconds.get(self.stage, 0.0) + elapsed
        )
        return False


def _with_retries(result: _AssetResult, retries: int, fn, *args):
    attempts = retries + 1
    for attempt in range(attempts):
        try:
            result.invocations += 1
            return fn(*args)
        except RetryableBackendError:
            if attempt == attempts - 1:
                raise


def _process_asset(
    asset: corpus.VideoAsset, config: RunConfig, store: IncidentStore, lexicon
) -> _AssetResult:
    result = _AssetResult(asset_id=asset.id)
    fingerprint = config.fingerprint()

    if store.is_checkpointed(asset.id, STAGE_COMPLETE, fingerprint):
        result.skipped = True
        return result

    if asset.flags:
        result.failed = True
        result.failures.append(
            StageFailure(asset.id, "ingest", f"flagged at scan time: {','.join(asset.flags)}")
        )
        return result

    try:
        with _StageTimer(result, "extract"):
            track = corpus.extract_audio(asset)
        with _StageTimer(result, "chunk"):
            chunks = corpus.split_audio(track, config.chunk_len, config.overlap)
    except Exception as exc:
        result.failed = True
        result.failures.append(StageFailure(asset.id, "extract", str(exc)))
        return result
    result.chunks = len(chunks)

    streams_by_chunk: list[list[separation.SpeakerStream]] = []
    with _StageTimer(result, "separate"):
        for chunk in chunks:
            try:
                streams = _with_retries(
                    result, config.retries, separation.separate, chunk, config.separation
                )
                streams_by_chunk.append(streams)
            except Exception as exc:
                result.failures.append(
                    StageFailure(asset.id, "separate", str(exc), chunk_index=chunk.index)
                )

    with _StageTimer(result, "link"):
        linkage = separation.link_speakers(streams_by_chunk)
    all_streams = [s for streams in streams_by_chunk for s in streams]
    result.streams = len(all_streams)

    segments: list[transcription.TranscriptSegment] = []
    with _StageTimer(result, "transcribe"):
        for stream in all_streams:
            try:
                segments.extend(
                    _with_retries(
                        result, config.retries, transcription.transcribe, stream, config.transcription
                    )
                )
            except Exception as exc:
                result.failures.append(
                    StageFailure(
                        asset.id, "transcribe", str(exc), chunk_index=stream.chunk_ref[1]
                    )
                )
    result.segments = len(segments)

    with _StageTimer(result, "merge"):
        transcript = transcription.merge_transcripts(segments, linkage, asset_id=asset.id)
        transcript = transcription.attribute_roles(transcript, all_streams)
    store.put_transcript(transcript.to_doc())
    _save_stream_artifacts(asset, all_streams, config, store)

    try:
        with _StageTimer(result, "summarize"):
            summary = _summarize_with_fallback(transcript, config, store, result)
        scores = insights.extract_indicators(transcript, lexicon)
        summary.indicator_scores = scores["overall"]
        with _StageTimer(result, "save"):
            result.record_key = insights.save_insights(summary, store)
    except Exception as exc:
        result.failed = True
        result.failures.append(StageFailure(asset.id, "summarize", str(exc)))
        return result

    store.checkpoint(asset.id, STAGE_COMPLETE, fingerprint)
    return result


def _summarize_with_fallback(
    transcript, config: RunConfig, store: IncidentStore, result: _AssetResult
) -> insights.IncidentSummary:
    """Summarize, falling back to the last stored summary on backend failure."""
    if not transcript.segments:
        return insights.IncidentSummary(
            asset_id=transcript.asset_id,
            summary_text="",
            backend_name=config.summarization.name,
            indicator_scores={},
            transcript_revision=transcript.revision,
        )
    try:
        result.invocations += 1
        return insights.summarize(transcript, config.summarization)
    except RetryableBackendError:
        prior = store.get_summary(f"{transcript.asset_id}@{transcript.revision - 1}")
        if prior is None:
            raise
        logger.warning("summarizer failed for %s; keeping prior summary", transcript.asset_id)
        return insights.IncidentSummary(
            asset_id=transcript.asset_id,
            summary_text=prior["summary_text"],
            backend_name=prior.get("backend", config.summarization.name),
            indicator_scores={},
            transcript_revision=transcript.revision,
            themes=tuple(prior.get("themes", ())),
        )


def _save_stream_artifacts(asset, streams, config: RunConfig, store: IncidentStore) -> None:
    rows = []
    stream_dir = None
    if config.save_streams:
        stream_dir = store.root / "streams"
        stream_dir.mkdir(exist_ok=True)
    for s in streams:
        row = {
            "chunk": s.chunk_ref[1],
            "local_speaker": s.local_speaker,
            "global_speaker": s.global_speaker,
            "start": s.chunk_start,
            "end": s.chunk_end,
            "energy": s.energy,
        }
        if stream_dir is not None:
            safe = asset.id.replace("/", "__")
            wav_path = stream_dir / f"{safe}.c{s.chunk_ref[1]:04d}.s{s.local_speaker}.wav"
            write_wav(wav_path, s.samples, s.sample_rate)
            row["path"] = str(wav_path)
        rows.append(row)
    store.put_streams_meta(asset.id, rows)


def run_pipeline(config: RunConfig, store: IncidentStore | None = None) -> PipelineRunReport:
    """Run the full analysis over the configured dataset root.

    Assets process independently (in parallel when configured); the
    report reduces per-asset results in manifest order, so identical runs
    produce identical reports regardless of scheduling.
    """
    config.validate()
    own_store = store is None
    if store is None:
        store = IncidentStore(config.store_path)
    lexicon = load_lexicon(config.resolved_lexicon_path())

    report = PipelineRunReport()
    t0 = time.perf_counter()
    try:
        manifest = corpus.scan_dataset(config.dataset_root)
        report.assets = len(manifest)
        corpus.save_manifest(manifest, store.root / "manifest.jsonl")
        for asset in manifest:
            store.put_asset(asset.to_record())

        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                results = list(pool.map(lambda a: _process_asset(a, config, store, lexicon), manifest))
        else:
            results = [_process_asset(asset, config, store, lexicon) for asset in manifest]

        for res in results:
            report.chunks += res.chunks
            report.streams += res.streams
            report.segments += res.segments
            report.failures.extend(res.failures)
            report.backend_invocations += res.invocations
            if res.skipped:
                report.skipped.append(res.asset_id)
            elif res.failed:
                report.failed_assets.append(res.asset_id)
            elif res.record_key:
                report.saved[res.asset_id] = res.record_key
            for stage, seconds in res.stage_seconds.items():
                report.stage_seconds[stage] = report.stage_seconds.get(stage, 0.0) + seconds
    finally:
        report.stage_seconds["total"] = time.perf_counter() - t0
        if own_store:
            store.close()
    return report
