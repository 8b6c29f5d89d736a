/**
 * Review session state: one reviewer, one open incident, pending edits.
 *
 * Invariants:
 * - pending edits always target the loaded transcript revision;
 * - submitting either applies the batch (and reloads at the new
 *   revision) or surfaces a conflict; it never silently rebases;
 * - every edit is persisted as a draft so a page reload restores it.
 */

import { ApiClient, RevisionConflictError, StaleBatchError } from "./api.js";
import { DraftStore } from "./drafts.js";
import type { CorrectionPayload, Role, TranscriptDoc } from "./types.js";

export interface PendingEdit {
  kind: "text" | "role";
  /** segment index for text edits, speaker label for role edits */
  target: number;
  before: string;
  after: string;
}

export interface ConflictState {
  baseRevision: number;
  currentRevision: number;
  /** what the server holds now, for the side-by-side view */
  current: TranscriptDoc;
  /** the reviewer's unsubmitted edits, untouched */
  pending: PendingEdit[];
}

export type SubmitOutcome =
  | { status: "applied"; revision: number }
  | { status: "conflict"; conflict: ConflictState }
  | { status: "rejected"; rejected: { id: string; reason: string }[] }
  | { status: "nothing-pending" };

export class ReviewSession {
  incidentId: string | null = null;
  transcript: TranscriptDoc | null = null;
  pending: PendingEdit[] = [];
  conflict: ConflictState | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly drafts: DraftStore,
    readonly reviewerId: string = "anonymous",
  ) {}

  /** Load an incident's transcript and restore any draft for its revision. */
  async open(incidentId: string): Promise<TranscriptDoc> {
    const doc = await this.api.fetchTranscript(incidentId);
    this.incidentId = incidentId;
    this.transcript = doc;
    this.conflict = null;
    this.pending = this.drafts.load(incidentId, doc.revision) ?? [];
    return doc;
  }

  private requireOpen(): TranscriptDoc {
    if (!this.incidentId || !this.transcript) {
      throw new Error("no incident open");
    }
    return this.transcript;
  }

  private persistDraft(): void {
    const doc = this.requireOpen();
    this.drafts.save(this.incidentId!, doc.revision, this.pending);
  }

  private upsert(edit: PendingEdit): void {
    const index = this.pending.findIndex(
      (e) => e.kind === edit.kind && e.target === edit.target,
    );
    if (edit.after === edit.before) {
      if (index >= 0) {
        this.pending.splice(index, 1);
      }
    } else if (index >= 0) {
      this.pending[index] = edit;
    } else {
      this.pending.push(edit);
    }
    this.persistDraft();
  }

  /** Record an inline text edit; editing back to the original clears it. */
  editSegment(segmentIndex: number, newText: string): void {
    const doc = this.requireOpen();
    const segment = doc.segments[segmentIndex];
    if (!segment) {
      throw new Error(`no segment ${segmentIndex}`);
    }
    this.upsert({ kind: "text", target: segmentIndex, before: segment.text, after: newText });
  }

  /** Flip a speaker between officer and civilian. */
  toggleRole(speaker: number): void {
    const doc = this.requireOpen();
    const current = this.effectiveRole(speaker);
    if (current === undefined) {
      throw new Error(`no speaker ${speaker}`);
    }
    const flipped: Role = current === "officer" ? "civilian" : "officer";
    const original = doc.roles[String(speaker)];
    this.upsert({ kind: "role", target: speaker, before: original ?? "unknown", after: flipped });
  }

  /** Segment text with the reviewer's pending edit applied, if any. */
  effectiveText(segmentIndex: number): string {
    const doc = this.requireOpen();
    const edit = this.pending.find((e) => e.kind === "text" && e.target === segmentIndex);
    return edit ? edit.after : doc.segments[segmentIndex]?.text ?? "";
  }

  effectiveRole(speaker: number): string | undefined {
    const doc = this.requireOpen();
    const edit = this.pending.find((e) => e.kind === "role" && e.target === speaker);
    return edit ? edit.after : doc.roles[String(speaker)];
  }

  hasPendingEdits(): boolean {
    return this.pending.length > 0;
  }

  /**
   * Post the pending batch against the loaded revision.
   *
   * On success the session reloads at the server's new revision and the
   * draft is cleared. On a revision conflict the pending edits and the
   * loaded transcript stay exactly as they were; the conflict state
   * carries the server's current transcript for a side-by-side diff.
   */
  async submit(): Promise<SubmitOutcome> {
    const doc = this.requireOpen();
    if (this.pending.length === 0) {
      return { status: "nothing-pending" };
    }
    const corrections: CorrectionPayload[] = this.pending.map((edit, i) => ({
      id: `${this.reviewerId}-${doc.revision}-${i}`,
      kind: edit.kind,
      target: edit.target,
      before: edit.before,
      after: edit.after,
    }));
    try {
      const result = await this.api.submitCorrections(this.incidentId!, doc.revision, corrections);
      this.drafts.clear(this.incidentId!, doc.revision);
      this.pending = [];
      await this.open(this.incidentId!);
      return { status: "applied", revision: result.revision };
    } catch (error) {
      if (error instanceof RevisionConflictError) {
        const current = await this.api.fetchTranscript(this.incidentId!);
        this.conflict = {
          baseRevision: doc.revision,
          currentRevision: error.currentRevision,
          current,
          pending: [...this.pending],
        };
        return { status: "conflict", conflict: this.conflict };
      }
      if (error instanceof StaleBatchError) {
        return { status: "rejected", rejected: error.rejected };
      }
      throw error;
    }
  }

  /** Drop all pending edits (reviewer chose to discard after a conflict). */
  discardPending(): void {
    const doc = this.requireOpen();
    this.pending = [];
    this.conflict = null;
    this.drafts.clear(this.incidentId!, doc.revision);
  }

  /**
   * After reviewing a conflict, adopt the server's revision. Pending
   * edits are intentionally dropped: re-applying them onto changed
   * content is the reviewer's decision, made edit by edit.
   */
  async adoptCurrent(): Promise<TranscriptDoc> {
    const conflict = this.conflict;
    if (!conflict || !this.incidentId) {
      throw new Error("no conflict to adopt");
    }
    this.drafts.clear(this.incidentId, conflict.baseRevision);
    this.pending = [];
    this.conflict = null;
    return this.open(this.incidentId);
  }
}
