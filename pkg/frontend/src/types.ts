/**
 * Payload shapes for the /v1 review API.
 *
 * Field names mirror the wire format exactly (snake_case) so responses
 * deserialize without mapping layers.
 */

export interface IncidentRecord {
  asset_id: string;
  revision: number;
  incident_ref: string | null;
  roles: Record<string, string>;
  summary_ref: string;
  indicator_scores: Record<string, number>;
  themes: string[];
  created: number;
  updated: number;
}

export interface IncidentPage {
  items: IncidentRecord[];
  total: number;
  offset: number;
  limit: number;
}

export interface TranscriptSegment {
  asset_id: string;
  chunk: number;
  speaker: number;
  local_speaker: number;
  start_s: number;
  end_s: number;
  text: string;
  backend: string;
}

export interface TranscriptDoc {
  asset_id: string;
  revision: number;
  roles: Record<string, string>;
  role_overrides: number[];
  correction_log: string[][];
  segments: TranscriptSegment[];
}

export interface StreamRef {
  chunk: number;
  local_speaker: number;
  global_speaker: number | null;
  start: number;
  end: number;
  energy: number;
  path?: string;
}

export interface AudioRefs {
  asset_id: string;
  streams: StreamRef[];
}

/** One correction in a submitted batch. `target` is a segment index for
 * text corrections and a speaker label for role corrections. */
export interface CorrectionPayload {
  id?: string;
  kind: "text" | "role";
  target: number;
  before: string;
  after: string;
}

export interface SubmitResult {
  revision: number;
  applied: string[];
  rejected: { id: string; reason: string }[];
}

export interface IncidentFilter {
  theme?: string;
  role?: string;
  incident_ref?: string;
  /** category:min:max, e.g. "politeness:0.5:1" */
  indicator?: string;
  offset?: number;
  limit?: number;
}

export type Role = "officer" | "civilian" | "unknown";
