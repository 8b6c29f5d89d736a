import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, RevisionConflictError, StaleBatchError } from "../src/api.js";
import { RecordedServiceStub, recorded } from "./stub.js";

function client(stub: RecordedServiceStub, reviewer = "tester"): ApiClient {
  return new ApiClient("", stub.fetch, reviewer);
}

describe("ApiClient", () => {
  it("lists incidents with the recorded shape", async () => {
    const stub = new RecordedServiceStub();
    const page = await client(stub).listIncidents();
    expect(page.total).toBe(recorded.incident_list.total);
    expect(page.items.map((i) => i.asset_id)).toEqual(
      recorded.incident_list.items.map((i) => i.asset_id),
    );
  });

  it("passes filters as query parameters", async () => {
    const stub = new RecordedServiceStub();
    const page = await client(stub).listIncidents({ theme: "nothing-has-this", limit: 5 });
    expect(page.items).toEqual([]);
    const last = stub.requests.at(-1)!;
    expect(last.path).toBe("/v1/incidents");
  });

  it("fetches a transcript", async () => {
    const stub = new RecordedServiceStub();
    const doc = await client(stub).fetchTranscript(recorded.transcript.asset_id);
    expect(doc.revision).toBe(recorded.transcript.revision);
    expect(doc.segments.length).toBeGreaterThan(0);
  });

  it("sends the reviewer id header on every request", async () => {
    const stub = new RecordedServiceStub();
    await client(stub, "officer-reviewer-3").fetchTranscript(recorded.transcript.asset_id);
    expect(stub.requests.at(-1)!.headers["X-Reviewer-Id"]).toBe("officer-reviewer-3");
  });

  it("applies a correction batch and returns the new revision", async () => {
    const stub = new RecordedServiceStub();
    const doc = await client(stub).fetchTranscript(recorded.transcript.asset_id);
    const result = await client(stub).submitCorrections(doc.asset_id, doc.revision, [
      { kind: "text", target: 0, before: doc.segments[0]!.text, after: "edited" },
    ]);
    expect(result.revision).toBe(doc.revision + 1);
    expect(result.applied).toHaveLength(1);
  });

  it("raises RevisionConflictError with the server revision on 409", async () => {
    const stub = new RecordedServiceStub();
    const doc = await client(stub).fetchTranscript(recorded.transcript.asset_id);
    const error = await client(stub)
      .submitCorrections(doc.asset_id, doc.revision + 5, [
        { kind: "text", target: 0, before: "x", after: "y" },
      ])
      .catch((e: unknown) => e);
    expect(error).toBeInstanceOf(RevisionConflictError);
    expect((error as RevisionConflictError).currentRevision).toBe(doc.revision);
  });

  it("raises StaleBatchError with the rejection report on 422", async () => {
    const stub = new RecordedServiceStub();
    const doc = await client(stub).fetchTranscript(recorded.transcript.asset_id);
    const error = await client(stub)
      .submitCorrections(doc.asset_id, doc.revision, [
        { id: "nope", kind: "text", target: 0, before: "not the text", after: "y" },
      ])
      .catch((e: unknown) => e);
    expect(error).toBeInstanceOf(StaleBatchError);
    expect((error as StaleBatchError).rejected[0]!.reason).toContain("stale");
  });

  it("raises ApiError on 404", async () => {
    const stub = new RecordedServiceStub();
    const error = await client(stub).fetchTranscript("missing.wav").catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(404);
  });
});
