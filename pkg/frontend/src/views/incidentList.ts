/**
 * Incident list view: paginated rows with themes and indicator badges.
 *
 * Render functions are pure (state in, HTML string out) so contract
 * tests can assert on them without a DOM.
 */

import { pageLabel, hasNext, hasPrev, type PageState } from "../pagination.js";
import type { IncidentPage, IncidentRecord } from "../types.js";

export interface IncidentRow {
  assetId: string;
  revision: number;
  incidentRef: string | null;
  themes: string[];
  /** categories with a non-zero score, formatted for badges */
  badges: { category: string; score: number }[];
  officerCount: number;
  civilianCount: number;
}

export interface IncidentListState {
  page: IncidentPage | null;
  /** set when the service was unreachable; pending edits are unaffected */
  error: string | null;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function buildIncidentRow(record: IncidentRecord): IncidentRow {
  const roles = Object.values(record.roles);
  return {
    assetId: record.asset_id,
    revision: record.revision,
    incidentRef: record.incident_ref,
    themes: record.themes,
    badges: Object.entries(record.indicator_scores)
      .filter(([, score]) => score > 0)
      .map(([category, score]) => ({ category, score })),
    officerCount: roles.filter((r) => r === "officer").length,
    civilianCount: roles.filter((r) => r === "civilian").length,
  };
}

function renderBadges(row: IncidentRow): string {
  if (row.badges.length === 0) {
    return `<span class="badge badge-none">no indicators</span>`;
  }
  return row.badges
    .map(
      (b) =>
        `<span class="badge badge-${escapeHtml(b.category)}">` +
        `${escapeHtml(b.category)} ${(b.score * 100).toFixed(0)}%</span>`,
    )
    .join(" ");
}

function renderRow(row: IncidentRow): string {
  const themes =
    row.themes.length > 0
      ? row.themes.map((t) => `<span class="theme">${escapeHtml(t)}</span>`).join(" ")
      : `<span class="theme theme-none">untagged</span>`;
  return (
    `<tr class="incident-row" data-asset-id="${escapeHtml(row.assetId)}">` +
    `<td class="asset">${escapeHtml(row.assetId)}<span class="rev">r${row.revision}</span></td>` +
    `<td class="themes">${themes}</td>` +
    `<td class="badges">${renderBadges(row)}</td>` +
    `<td class="speakers">${row.officerCount} officer / ${row.civilianCount} civilian</td>` +
    `</tr>`
  );
}

export function renderIncidentList(state: IncidentListState): string {
  if (state.error !== null) {
    return (
      `<div class="banner banner-retry" role="alert">` +
      `Service unreachable: ${escapeHtml(state.error)} ` +
      `<button class="retry" data-action="retry">Retry</button>` +
      `<p class="note">Your pending edits are safe in local drafts.</p>` +
      `</div>`
    );
  }
  if (state.page === null) {
    return `<div class="loading">Loading incidents…</div>`;
  }
  if (state.page.items.length === 0) {
    return `<div class="empty-state">No incidents match this filter.</div>`;
  }
  const pageState: PageState = {
    offset: state.page.offset,
    limit: state.page.limit,
    total: state.page.total,
  };
  const rows = state.page.items.map((record) => renderRow(buildIncidentRow(record))).join("");
  return (
    `<table class="incident-list">` +
    `<thead><tr><th>Incident</th><th>Themes</th><th>Indicators</th><th>Speakers</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<nav class="pager">` +
    `<button data-action="prev-page"${hasPrev(pageState) ? "" : " disabled"}>Previous</button>` +
    `<span class="page-label">${pageLabel(pageState)}</span>` +
    `<button data-action="next-page"${hasNext(pageState) ? "" : " disabled"}>Next</button>` +
    `</nav>`
  );
}
