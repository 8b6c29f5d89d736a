/**
 * Transcript review view: speaker turn blocks with inline editing state,
 * role toggles, audio stream references, and the conflict diff.
 */

import type { ReviewSession, ConflictState, PendingEdit } from "../session.js";
import type { AudioRefs, TranscriptDoc, TranscriptSegment } from "../types.js";
import { escapeHtml } from "./incidentList.js";

export interface TurnBlock {
  speaker: number;
  role: string;
  overridden: boolean;
  segments: { index: number; segment: TranscriptSegment }[];
}

/** Group consecutive same-speaker segments into turns. */
export function buildTurnBlocks(doc: TranscriptDoc): TurnBlock[] {
  const blocks: TurnBlock[] = [];
  doc.segments.forEach((segment, index) => {
    const last = blocks[blocks.length - 1];
    if (last && last.speaker === segment.speaker) {
      last.segments.push({ index, segment });
    } else {
      blocks.push({
        speaker: segment.speaker,
        role: doc.roles[String(segment.speaker)] ?? "unknown",
        overridden: doc.role_overrides.includes(segment.speaker),
        segments: [{ index, segment }],
      });
    }
  });
  return blocks;
}

function formatTime(seconds: number): string {
  const m = Math.floor(seconds / 60);
  const s = seconds - m * 60;
  return `${m}:${s.toFixed(1).padStart(4, "0")}`;
}

function renderSegment(session: ReviewSession, index: number, segment: TranscriptSegment): string {
  const effective = session.effectiveText(index);
  const edited = effective !== segment.text;
  return (
    `<div class="segment${edited ? " segment-edited" : ""}" data-segment="${index}">` +
    `<span class="time">${formatTime(segment.start_s)}</span>` +
    `<span class="text" contenteditable="true" data-segment-text="${index}">` +
    `${escapeHtml(effective)}</span>` +
    (edited ? `<span class="marker marker-edited" title="pending edit">●</span>` : "") +
    `</div>`
  );
}

function renderBlock(session: ReviewSession, block: TurnBlock): string {
  const role = session.effectiveRole(block.speaker) ?? block.role;
  const roleChanged = role !== block.role;
  const overrideBadge =
    block.overridden || roleChanged
      ? `<span class="badge badge-override" title="role set by reviewer">override</span>`
      : "";
  const segments = block.segments.map(({ index, segment }) => renderSegment(session, index, segment)).join("");
  return (
    `<section class="turn" data-speaker="${block.speaker}">` +
    `<header class="turn-header">` +
    `<span class="role role-${escapeHtml(role)}">${escapeHtml(role)}</span>` +
    `<span class="speaker-label">speaker ${block.speaker}</span>` +
    overrideBadge +
    `<button data-action="toggle-role" data-speaker="${block.speaker}">toggle role</button>` +
    `</header>${segments}</section>`
  );
}

export function renderAudioRefs(refs: AudioRefs): string {
  const rows = refs.streams
    .map(
      (s) =>
        `<li class="stream" data-chunk="${s.chunk}" data-speaker="${s.global_speaker ?? s.local_speaker}">` +
        `chunk ${s.chunk} · speaker ${s.global_speaker ?? s.local_speaker} · ` +
        `${formatTime(s.start)}-${formatTime(s.end)}` +
        (s.path ? ` <audio controls preload="none" src="${escapeHtml(s.path)}"></audio>` : "") +
        `</li>`,
    )
    .join("");
  return `<ul class="streams">${rows}</ul>`;
}

/**
 * Side-by-side conflict view: for every pending edit, what the reviewer
 * based it on, what the server holds now, and the reviewer's text.
 * Nothing is merged automatically.
 */
export function renderConflictView(conflict: ConflictState): string {
  const rows = conflict.pending
    .map((edit) => {
      const currentValue =
        edit.kind === "text"
          ? conflict.current.segments[edit.target]?.text ?? "(segment gone)"
          : conflict.current.roles[String(edit.target)] ?? "(speaker gone)";
      const label = edit.kind === "text" ? `segment ${edit.target}` : `speaker ${edit.target} role`;
      const clean = currentValue === edit.before;
      return (
        `<tr class="conflict-row${clean ? "" : " conflict-hot"}">` +
        `<td>${escapeHtml(label)}</td>` +
        `<td class="was">${escapeHtml(edit.before)}</td>` +
        `<td class="now">${escapeHtml(currentValue)}</td>` +
        `<td class="yours">${escapeHtml(edit.after)}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<div class="conflict-view" role="alertdialog">` +
    `<h2>Someone else updated this transcript</h2>` +
    `<p>You edited revision ${conflict.baseRevision}; the server is at ` +
    `revision ${conflict.currentRevision}. Nothing was applied and your ` +
    `edits are kept below. Re-apply the ones that still make sense.</p>` +
    `<table class="conflict-diff">` +
    `<thead><tr><th>Target</th><th>You edited from</th><th>Current</th><th>Your edit</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<button data-action="adopt-current">Load current revision</button>` +
    `<button data-action="discard-pending">Discard my edits</button>` +
    `</div>`
  );
}

export function renderTranscriptView(session: ReviewSession, audio?: AudioRefs): string {
  const doc = session.transcript;
  if (!doc) {
    return `<div class="loading">Loading transcript…</div>`;
  }
  if (session.conflict) {
    return renderConflictView(session.conflict);
  }
  const blocks = buildTurnBlocks(doc).map((b) => renderBlock(session, b)).join("");
  const pendingCount = session.pending.length;
  return (
    `<article class="transcript" data-asset-id="${escapeHtml(doc.asset_id)}">` +
    `<header class="transcript-header">` +
    `<h1>${escapeHtml(doc.asset_id)}</h1>` +
    `<span class="revision-badge">revision ${doc.revision}</span>` +
    `</header>` +
    blocks +
    (audio ? `<aside class="audio-panel"><h2>Separated streams</h2>${renderAudioRefs(audio)}</aside>` : "") +
    `<footer class="submit-bar">` +
    `<span class="pending-count">${pendingCount} pending edit${pendingCount === 1 ? "" : "s"}</span>` +
    `<button data-action="submit" ${pendingCount === 0 ? "disabled" : ""}>Submit corrections</button>` +
    `</footer></article>`
  );
}

export type { PendingEdit };
