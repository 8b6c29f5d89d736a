import pytest
from fastapi.testclient import TestClient

from bwckit.config import RunConfig
from bwckit.pipeline import run_pipeline
from bwckit.service import create_app
from bwckit.store import IncidentStore, QueryFilter
from bwckit.transcription import TranscriptionBackendDescriptor


@pytest.fixture(scope="module")
def service(small_corpus, tmp_path_factory):
    store_path = tmp_path_factory.mktemp("svc-store")
    config = RunConfig(
        dataset_root=str(small_corpus.root),
        store_path=str(store_path),
        transcription=TranscriptionBackendDescriptor(
            name="sidecar", truth_dir=str(small_corpus.truth_dir)
        ),
    )
    report = run_pipeline(config)
    assert report.failed_assets == []
    store = IncidentStore(store_path)
    client = TestClient(create_app(store, config))
    yield client, store
    store.close()


def _fetch_transcript(client, asset_id):
    response = client.get(f"/v1/incidents/{asset_id}/transcript")
    assert response.status_code == 200
    return response.json()


class TestReads:
    def test_list_incidents(self, service):
        client, store = service
        response = client.get("/v1/incidents")
        assert response.status_code == 200
        body = response.json()
        assert body["total"] == 2
        assert {item["asset_id"] for item in body["items"]} == {"x_one.wav", "y_two.wav"}

    def test_list_matches_store_query(self, service):
        client, store = service
        via_api = client.get("/v1/incidents", params={"role": "officer"}).json()
        via_store = store.query(QueryFilter(role="officer", limit=50))
        assert [i["asset_id"] for i in via_api["items"]] == [r.asset_id for r in via_store.records]

    def test_transcript_fetch(self, service):
        client, _ = service
        doc = _fetch_transcript(client, "x_one.wav")
        assert doc["revision"] == 0
        assert doc["segments"]
        assert doc["roles"]["0"] == "officer"

    def test_audio_refs(self, service):
        client, _ = service
        response = client.get("/v1/incidents/x_one.wav/audio")
        assert response.status_code == 200
        streams = response.json()["streams"]
        assert streams
        assert {"chunk", "global_speaker", "energy"} <= set(streams[0])

    def test_unknown_asset_404(self, service):
        client, _ = service
        assert client.get("/v1/incidents/nope.wav/transcript").status_code == 404

    def test_quality_404_when_absent(self, service):
        client, _ = service
        assert client.get("/v1/incidents/x_one.wav/quality").status_code == 404

    def test_quality_served_when_stored(self, service):
        client, store = service
        store.put_report("y_two.wav", {"mean_word_count": {"a": 1.0, "b": 2.0}})
        response = client.get("/v1/incidents/y_two.wav/quality")
        assert response.status_code == 200
        assert response.json()["mean_word_count"]["a"] == 1.0


class TestCorrections:
    def test_round_trip_increments_revision(self, service):
        client, store = service
        doc = _fetch_transcript(client, "y_two.wav")
        target_text = doc["segments"][0]["text"]
        response = client.post(
            "/v1/incidents/y_two.wav/corrections",
            headers={"X-Reviewer-Id": "reviewer-7"},
            json={
                "base_revision": doc["revision"],
                "corrections": [{
                    "id": "fix-1", "kind": "text", "target": 0,
                    "before": target_text, "after": target_text + " [sic]",
                }],
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["revision"] == doc["revision"] + 1
        assert body["applied"] == ["fix-1"]

        # read-your-writes: the fetch reflects the mutation
        updated = _fetch_transcript(client, "y_two.wav")
        assert updated["revision"] == doc["revision"] + 1
        assert updated["segments"][0]["text"] == target_text + " [sic]"
        # correction event persisted with its author
        event = store.get_correction("fix-1")
        assert event["author"] == "reviewer-7"
        # downstream record refreshed at the new revision, old preserved
        assert store.get_record("y_two.wav", updated["revision"]) is not None
        assert store.get_record("y_two.wav", doc["revision"]) is not None

    def test_stale_base_revision_conflict(self, service):
        client, _ = service
        doc = _fetch_transcript(client, "y_two.wav")
        response = client.post(
            "/v1/incidents/y_two.wav/corrections",
            json={
                "base_revision": doc["revision"] - 1,
                "corrections": [{
                    "kind": "text", "target": 0,
                    "before": "whatever", "after": "nope",
                }],
            },
        )
        assert response.status_code == 409
        assert response.json()["detail"]["current_revision"] == doc["revision"]
        # nothing applied
        assert _fetch_transcript(client, "y_two.wav")["revision"] == doc["revision"]

    def test_all_stale_batch_rejected(self, service):
        client, _ = service
        doc = _fetch_transcript(client, "x_one.wav")
        response = client.post(
            "/v1/incidents/x_one.wav/corrections",
            json={
                "base_revision": doc["revision"],
                "corrections": [{
                    "kind": "text", "target": 0,
                    "before": "text that is not there", "after": "x",
                }],
            },
        )
        assert response.status_code == 422
        assert response.json()["detail"]["rejected"]

    def test_role_override(self, service):
        client, _ = service
        doc = _fetch_transcript(client, "x_one.wav")
        speaker = next(s for s, r in doc["roles"].items() if r == "civilian")
        response = client.post(
            "/v1/incidents/x_one.wav/role",
            json={"base_revision": doc["revision"], "speaker": int(speaker), "role": "officer"},
        )
        assert response.status_code == 200
        updated = _fetch_transcript(client, "x_one.wav")
        assert updated["roles"][speaker] == "officer"
        assert int(speaker) in updated["role_overrides"]

    def test_theme_tagging(self, service):
        client, store = service
        response = client.put(
            "/v1/incidents/x_one.wav/themes", json={"themes": ["Traffic Stop", "K9 Unit"]}
        )
        assert response.status_code == 200
        assert response.json()["themes"] == ["traffic stop", "k9 unit"]
        page = store.query(QueryFilter(theme="k9 unit"))
        assert [r.asset_id for r in page.records] == ["x_one.wav"]
