/**
 * Typed client for the /v1 review endpoints.
 *
 * This module is the only place the UI talks to the network; everything
 * above it works with returned objects. The fetch implementation is
 * injectable so contract tests can run against a recorded service stub.
 */

import type {
  AudioRefs,
  CorrectionPayload,
  IncidentFilter,
  IncidentPage,
  Role,
  SubmitResult,
  TranscriptDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
    message?: string,
  ) {
    super(message ?? `request failed with status ${status}`);
    this.name = "ApiError";
  }
}

/** 409: the submission targeted a revision the server has moved past. */
export class RevisionConflictError extends ApiError {
  constructor(
    status: number,
    detail: unknown,
    public readonly currentRevision: number,
  ) {
    super(status, detail, `revision conflict; server is at ${currentRevision}`);
    this.name = "RevisionConflictError";
  }
}

/** 422: every correction in the batch was stale or invalid. */
export class StaleBatchError extends ApiError {
  constructor(
    status: number,
    detail: unknown,
    public readonly rejected: { id: string; reason: string }[],
  ) {
    super(status, detail, "nothing applied: every correction was rejected");
    this.name = "StaleBatchError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly reviewerId: string = "anonymous",
  ) {}

  private url(path: string, params?: Record<string, string | number | undefined>): string {
    const query = params
      ? Object.entries(params)
          .filter(([, v]) => v !== undefined && v !== "")
          .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
          .join("&")
      : "";
    return `${this.baseUrl}${path}${query ? `?${query}` : ""}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(path, {
      ...init,
      headers: {
        "Content-Type": "application/json",
        "X-Reviewer-Id": this.reviewerId,
        ...(init?.headers ?? {}),
      },
    });
    const body = response.status === 204 ? null : await response.json();
    if (response.ok) {
      return body as T;
    }
    const detail = (body as { detail?: unknown })?.detail ?? body;
    if (response.status === 409 && detail && typeof detail === "object") {
      const current = (detail as { current_revision?: number }).current_revision;
      throw new RevisionConflictError(response.status, detail, current ?? -1);
    }
    if (response.status === 422 && detail && typeof detail === "object" && "rejected" in (detail as object)) {
      throw new StaleBatchError(
        response.status,
        detail,
        (detail as { rejected: { id: string; reason: string }[] }).rejected,
      );
    }
    throw new ApiError(response.status, detail);
  }

  listIncidents(filter: IncidentFilter = {}): Promise<IncidentPage> {
    return this.request<IncidentPage>(
      this.url("/v1/incidents", {
        theme: filter.theme,
        role: filter.role,
        incident_ref: filter.incident_ref,
        indicator: filter.indicator,
        offset: filter.offset,
        limit: filter.limit,
      }),
    );
  }

  fetchTranscript(assetId: string): Promise<TranscriptDoc> {
    return this.request<TranscriptDoc>(this.url(`/v1/incidents/${assetId}/transcript`));
  }

  fetchAudioRefs(assetId: string): Promise<AudioRefs> {
    return this.request<AudioRefs>(this.url(`/v1/incidents/${assetId}/audio`));
  }

  fetchQuality(assetId: string): Promise<Record<string, unknown>> {
    return this.request(this.url(`/v1/incidents/${assetId}/quality`));
  }

  submitCorrections(
    assetId: string,
    baseRevision: number,
    corrections: CorrectionPayload[],
  ): Promise<SubmitResult> {
    return this.request<SubmitResult>(this.url(`/v1/incidents/${assetId}/corrections`), {
      method: "POST",
      body: JSON.stringify({ base_revision: baseRevision, corrections }),
    });
  }

  submitRoleOverride(
    assetId: string,
    baseRevision: number,
    speaker: number,
    role: Role,
  ): Promise<SubmitResult> {
    return this.request<SubmitResult>(this.url(`/v1/incidents/${assetId}/role`), {
      method: "POST",
      body: JSON.stringify({ base_revision: baseRevision, speaker, role }),
    });
  }

  setThemes(assetId: string, themes: string[]): Promise<{ asset_id: string; themes: string[] }> {
    return this.request(this.url(`/v1/incidents/${assetId}/themes`), {
      method: "PUT",
      body: JSON.stringify({ themes }),
    });
  }
}
