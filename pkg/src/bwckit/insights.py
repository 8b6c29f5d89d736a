"""Incident summaries, behavioral indicators, and the correction loop.

Summarization sits behind the usual backend boundary (transcript text in,
summary text out). The built-in ``extractive`` mock takes the first
sentence of each speaker turn block, which is deterministic and therefore
testable. Corrections are immutable events: a transcript's revision
increments once per applied batch, the applied ids append to its
correction log, and replaying the log from revision 0 reconstructs every
intermediate state.
"""

from __future__ import annotations

import re
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

from .backends import BackendDescriptor, BackendError, run_external
from .lexicon import Lexicon, aggregate_hit_rates
from .quality import tokenize
from .store import IncidentRecord, IncidentStore, ReferentialError
from .transcription import ROLE_CIVILIAN, ROLE_OFFICER, MergedTranscript

_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")


@dataclass(frozen=True)
class SummarizationBackendDescriptor(BackendDescriptor):
    """Summarization backend handle; external template placeholders:
    {input} {output}."""


EXTRACTIVE = SummarizationBackendDescriptor(name="extractive")


@dataclass
class IncidentSummary:
    asset_id: str
    summary_text: str
    backend_name: str
    indicator_scores: dict[str, float]
    transcript_revision: int
    themes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Correction:
    """One reviewer edit: replace a segment's text or a speaker's role.

    ``before`` must match the current content when the correction is
    applied; a mismatch marks the correction stale and it is rejected
    without blocking the rest of its batch.
    """

    id: str
    asset_id: str
    kind: str  # "text" | "role"
    target: int  # segment index for text, speaker label for role
    before: str
    after: str
    author: str
    timestamp: float

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "asset_id": self.asset_id,
            "kind": self.kind,
            "target": self.target,
            "before": self.before,
            "after": self.after,
            "author": self.author,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Correction":
        return cls(
            id=rec["id"],
            asset_id=rec["asset_id"],
            kind=rec["kind"],
            target=int(rec["target"]),
            before=rec["before"],
            after=rec["after"],
            author=rec.get("author", ""),
            timestamp=float(rec.get("timestamp", 0.0)),
        )


@dataclass(frozen=True)
class RejectedCorrection:
    correction_id: str
    reason: str


@dataclass
class CorrectionOutcome:
    transcript: MergedTranscript
    applied: list[str]
    rejected: list[RejectedCorrection]


class NothingAppliedError(ValueError):
    """Every correction in a non-empty batch was stale or invalid."""

    def __init__(self, rejected: list[RejectedCorrection]):
        super().__init__("nothing applied: every correction was rejected")
        self.rejected = rejected


def _first_sentence(text: str) -> str:
    match = _SENTENCE_END.search(text)
    if match:
        return text[: match.end()].strip()
    return text.strip()


def turn_blocks(transcript: MergedTranscript) -> list[tuple[int, str]]:
    """(speaker, joined text) for each run of consecutive same-speaker segments."""
    blocks: list[tuple[int, str]] = []
    for seg in transcript.segments:
        speaker = seg.global_speaker if seg.global_speaker is not None else seg.local_speaker
        if blocks and blocks[-1][0] == speaker:
            blocks[-1] = (speaker, blocks[-1][1] + " " + seg.text)
        else:
            blocks.append((speaker, seg.text))
    return blocks


def _summarize_extractive(transcript: MergedTranscript) -> str:
    return "\n".join(_first_sentence(text) for _, text in turn_blocks(transcript))


def transcript_as_text(transcript: MergedTranscript) -> str:
    """Readable dialogue rendering handed to external summarizers."""
    lines = []
    for speaker, text in turn_blocks(transcript):
        role = transcript.roles.get(speaker, "unknown")
        lines.append(f"[{role} {speaker}] {text}")
    return "\n".join(lines)


def summarize(
    transcript: MergedTranscript, backend: SummarizationBackendDescriptor
) -> IncidentSummary:
    """Summarize a non-empty transcript through the configured backend."""
    if not transcript.segments:
        raise ValueError("cannot summarize an empty transcript")

    if backend.is_external:
        with tempfile.TemporaryDirectory(prefix="bwckit-sum-") as tmp:
            in_path = Path(tmp) / "transcript.txt"
            out_path = Path(tmp) / "summary.txt"
            in_path.write_text(transcript_as_text(transcript), encoding="utf-8")
            run_external(backend, {"input": str(in_path), "output": str(out_path)})
            if not out_path.exists():
                raise BackendError(f"backend {backend.name} wrote no summary")
            text = out_path.read_text(encoding="utf-8").strip()
    elif backend.name == "extractive":
        text = _summarize_extractive(transcript)
    else:
        raise BackendError(f"unknown built-in summarization backend {backend.name!r}")

    return IncidentSummary(
        asset_id=transcript.asset_id,
        summary_text=text,
        backend_name=backend.name,
        indicator_scores={},
        transcript_revision=transcript.revision,
    )


def extract_indicators(
    transcript: MergedTranscript, lexicon: Lexicon
) -> dict[str, dict[str, float]]:
    """Lexicon hit rates per category, reported overall and per role.

    Returns {"overall": {...}, "officer": {...}, "civilian": {...}} with
    every rate in [0, 1]. Matching happens within segments, so any
    segment reordering that keeps per-role token groups intact yields
    identical scores.
    """
    groups: dict[str, list[tuple[str, ...]]] = {
        "overall": [],
        ROLE_OFFICER: [],
        ROLE_CIVILIAN: [],
    }
    for seg in transcript.segments:
        tokens = tokenize(seg.text).tokens
        groups["overall"].append(tokens)
        role = transcript.roles.get(seg.global_speaker, "")
        if role in (ROLE_OFFICER, ROLE_CIVILIAN):
            groups[role].append(tokens)
    return {scope: aggregate_hit_rates(token_groups, lexicon) for scope, token_groups in groups.items()}


def apply_corrections(
    transcript: MergedTranscript, corrections: list[Correction]
) -> CorrectionOutcome:
    """Apply a correction batch in order.

    Stale or invalid corrections are rejected individually; if anything
    applied, the revision increments by exactly one and the applied ids
    are appended to the correction log as one batch. An all-stale
    non-empty batch raises :class:`NothingAppliedError`. An empty batch
    returns the transcript unchanged.
    """
    if not corrections:
        return CorrectionOutcome(transcript=transcript, applied=[], rejected=[])

    segments = list(transcript.segments)
    roles = dict(transcript.roles)
    overrides = set(transcript.role_overrides)
    applied: list[str] = []
    rejected: list[RejectedCorrection] = []

    for corr in corrections:
        if corr.asset_id != transcript.asset_id:
            rejected.append(RejectedCorrection(corr.id, "wrong asset"))
            continue
        if corr.kind == "text":
            if not 0 <= corr.target < len(segments):
                rejected.append(RejectedCorrection(corr.id, f"no segment {corr.target}"))
                continue
            if segments[corr.target].text != corr.before:
                rejected.append(RejectedCorrection(corr.id, "stale: text changed"))
                continue
            segments[corr.target] = replace(segments[corr.target], text=corr.after)
        elif corr.kind == "role":
            if corr.target not in roles:
                rejected.append(RejectedCorrection(corr.id, f"no speaker {corr.target}"))
                continue
            if roles[corr.target] != corr.before:
                rejected.append(RejectedCorrection(corr.id, "stale: role changed"))
                continue
            roles[corr.target] = corr.after
            overrides.add(corr.target)
        else:
            rejected.append(RejectedCorrection(corr.id, f"unknown kind {corr.kind!r}"))
            continue
        applied.append(corr.id)

    if not applied:
        raise NothingAppliedError(rejected)

    updated = MergedTranscript(
        asset_id=transcript.asset_id,
        segments=segments,
        roles=roles,
        revision=transcript.revision + 1,
        correction_log=[list(batch) for batch in transcript.correction_log] + [applied],
        role_overrides=overrides,
    )
    return CorrectionOutcome(transcript=updated, applied=applied, rejected=rejected)


def save_insights(summary: IncidentSummary, store: IncidentStore) -> str:
    """Persist a summary as an indexed incident record.

    Idempotent per (asset_id, transcript_revision): saving the same
    summary twice upserts one record and returns the same id. The
    transcript at that revision must already be stored, both for
    referential integrity and because the record carries its roles.
    """
    if not store.has_asset(summary.asset_id):
        raise ReferentialError(f"unknown asset {summary.asset_id!r}")
    transcript_doc = store.get_transcript(summary.asset_id, summary.transcript_revision)
    if transcript_doc is None:
        raise ReferentialError(
            f"no stored transcript for {summary.asset_id!r} "
            f"at revision {summary.transcript_revision}"
        )
    asset_doc = store.get_asset(summary.asset_id) or {}
    store.put_summary(
        summary.asset_id,
        summary.transcript_revision,
        {
            "asset_id": summary.asset_id,
            "revision": summary.transcript_revision,
            "summary_text": summary.summary_text,
            "backend": summary.backend_name,
            "themes": list(summary.themes),
        },
    )
    record = IncidentRecord(
        asset_id=summary.asset_id,
        revision=summary.transcript_revision,
        incident_ref=asset_doc.get("incident_ref"),
        roles={int(k): v for k, v in transcript_doc.get("roles", {}).items()},
        summary_ref=f"{summary.asset_id}@{summary.transcript_revision}",
        indicator_scores=dict(summary.indicator_scores),
        themes=summary.themes,
    )
    return store.put_record(record)


def replay_corrections(
    base: MergedTranscript, batches: list[list[Correction]]
) -> list[MergedTranscript]:
    """Re-apply correction batches from a base transcript.

    Returns every revision in order, starting with the base. Used to
    audit that the correction log fully determines transcript history.
    """
    revisions = [base]
    current = base
    for batch in batches:
        current = apply_corrections(current, batch).transcript
        revisions.append(current)
    return revisions
