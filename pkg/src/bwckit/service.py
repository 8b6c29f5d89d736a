"""HTTP review service: the endpoints the reviewer UI drives.

All routes live under /v1. Mutations use optimistic concurrency: the
client sends the transcript revision it loaded; a mismatch returns 409
with the current revision and applies nothing. Every applied batch bumps
the revision, appends to the correction log, and refreshes the stored
summary and incident record, so reviewer decisions flow into the same
records the pipeline wrote.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import replace

from fastapi import FastAPI, Header, HTTPException, Query
from pydantic import BaseModel, Field

from . import insights
from .config import RunConfig
from .lexicon import default_lexicon_path, load_lexicon
from .store import IncidentStore, QueryFilter
from .transcription import MergedTranscript


class CorrectionIn(BaseModel):
    id: str | None = None
    kind: str = Field(pattern="^(text|role)$")
    target: int
    before: str
    after: str


class CorrectionBatchIn(BaseModel):
    base_revision: int
    corrections: list[CorrectionIn]


class RoleOverrideIn(BaseModel):
    base_revision: int
    speaker: int
    role: str = Field(pattern="^(officer|civilian|unknown)$")


class ThemesIn(BaseModel):
    themes: list[str]


def _parse_indicator(raw: str | None) -> tuple[str, float, float] | None:
    if raw is None:
        return None
    parts = raw.split(":")
    if len(parts) != 3:
        raise HTTPException(status_code=400, detail="indicator filter must be category:min:max")
    try:
        return (parts[0], float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app(store: IncidentStore, config: RunConfig | None = None) -> FastAPI:
    app = FastAPI(title="bwckit review service")
    summarizer = config.summarization if config else insights.EXTRACTIVE
    lexicon = load_lexicon(
        config.resolved_lexicon_path() if config else default_lexicon_path()
    )

    def _load_transcript(asset_id: str) -> MergedTranscript:
        doc = store.get_transcript(asset_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"no transcript for {asset_id}")
        return MergedTranscript.from_doc(doc)

    def _refresh_downstream(transcript: MergedTranscript) -> None:
        """Recompute summary + indicators and upsert the incident record."""
        if transcript.segments:
            summary = insights.summarize(transcript, summarizer)
        else:
            summary = insights.IncidentSummary(
                asset_id=transcript.asset_id,
                summary_text="",
                backend_name=summarizer.name,
                indicator_scores={},
                transcript_revision=transcript.revision,
            )
        summary.indicator_scores = insights.extract_indicators(transcript, lexicon)["overall"]
        prior = store.get_record(transcript.asset_id, transcript.revision - 1)
        if prior is not None:
            summary.themes = prior.themes
        insights.save_insights(summary, store)

    @app.get("/v1/incidents")
    def list_incidents(
        theme: str | None = None,
        role: str | None = None,
        incident_ref: str | None = None,
        indicator: str | None = None,
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=50, ge=1, le=500),
    ):
        flt = QueryFilter(
            theme=theme,
            role=role,
            incident_ref=incident_ref,
            indicator=_parse_indicator(indicator),
            offset=offset,
            limit=limit,
        )
        try:
            page = store.query(flt)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "items": [r.to_doc() for r in page.records],
            "total": page.total,
            "offset": page.offset,
            "limit": page.limit,
        }

    @app.get("/v1/incidents/{asset_id:path}/transcript")
    def get_transcript(asset_id: str):
        return _load_transcript(asset_id).to_doc()

    @app.get("/v1/incidents/{asset_id:path}/audio")
    def get_audio_refs(asset_id: str):
        rows = store.get_streams_meta(asset_id)
        if not rows and not store.has_asset(asset_id):
            raise HTTPException(status_code=404, detail=f"unknown asset {asset_id}")
        return {"asset_id": asset_id, "streams": rows}

    @app.get("/v1/incidents/{asset_id:path}/quality")
    def get_quality(asset_id: str):
        doc = store.get_report(asset_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"no quality report for {asset_id}")
        return doc

    def _apply_batch(
        asset_id: str, base_revision: int, corrections: list[insights.Correction]
    ) -> dict:
        transcript = _load_transcript(asset_id)
        if transcript.revision != base_revision:
            raise HTTPException(
                status_code=409,
                detail={
                    "error": "revision conflict",
                    "current_revision": transcript.revision,
                },
            )
        try:
            outcome = insights.apply_corrections(transcript, corrections)
        except insights.NothingAppliedError as exc:
            raise HTTPException(
                status_code=422,
                detail={
                    "error": "nothing applied",
                    "rejected": [
                        {"id": r.correction_id, "reason": r.reason} for r in exc.rejected
                    ],
                },
            ) from exc
        for corr in corrections:
            if corr.id in outcome.applied:
                store.put_correction(corr.to_record())
        store.put_transcript(outcome.transcript.to_doc())
        _refresh_downstream(outcome.transcript)
        return {
            "revision": outcome.transcript.revision,
            "applied": outcome.applied,
            "rejected": [{"id": r.correction_id, "reason": r.reason} for r in outcome.rejected],
        }

    @app.post("/v1/incidents/{asset_id:path}/corrections")
    def submit_corrections(
        asset_id: str,
        batch: CorrectionBatchIn,
        x_reviewer_id: str = Header(default="anonymous"),
    ):
        corrections = [
            insights.Correction(
                id=c.id or f"c-{uuid.uuid4().hex[:12]}",
                asset_id=asset_id,
                kind=c.kind,
                target=c.target,
                before=c.before,
                after=c.after,
                author=x_reviewer_id,
                timestamp=time.time(),
            )
            for c in batch.corrections
        ]
        return _apply_batch(asset_id, batch.base_revision, corrections)

    @app.post("/v1/incidents/{asset_id:path}/role")
    def submit_role_override(
        asset_id: str,
        override: RoleOverrideIn,
        x_reviewer_id: str = Header(default="anonymous"),
    ):
        transcript = _load_transcript(asset_id)
        current = transcript.roles.get(override.speaker)
        if current is None:
            raise HTTPException(status_code=404, detail=f"no speaker {override.speaker}")
        correction = insights.Correction(
            id=f"r-{uuid.uuid4().hex[:12]}",
            asset_id=asset_id,
            kind="role",
            target=override.speaker,
            before=current,
            after=override.role,
            author=x_reviewer_id,
            timestamp=time.time(),
        )
        return _apply_batch(asset_id, override.base_revision, [correction])

    @app.put("/v1/incidents/{asset_id:path}/themes")
    def set_themes(asset_id: str, body: ThemesIn):
        transcript = _load_transcript(asset_id)
        record = store.get_record(asset_id, transcript.revision)
        if record is None:
            raise HTTPException(status_code=404, detail=f"no incident record for {asset_id}")
        store.put_record(replace(record, themes=tuple(body.themes)))
        updated = store.get_record(asset_id, transcript.revision)
        return {"asset_id": asset_id, "themes": list(updated.themes)}

    return app


def serve_review(config: RunConfig, host: str = "127.0.0.1", port: int = 8701):
    """Run the review service until interrupted."""
    import uvicorn

    store = IncidentStore(config.store_path)
    app = create_app(store, config)
    uvicorn.run(app, host=host, port=port)
