/**
 * Offset/limit paging helpers for the incident list.
 *
 * The server slices a deterministic ordering, so stepping the offset by
 * the page size traverses it gap-free while the snapshot is stable.
 */

export interface PageState {
  offset: number;
  limit: number;
  total: number;
}

export function hasNext(state: PageState): boolean {
  return state.offset + state.limit < state.total;
}

export function hasPrev(state: PageState): boolean {
  return state.offset > 0;
}

export function nextPage(state: PageState): PageState {
  if (!hasNext(state)) {
    return state;
  }
  return { ...state, offset: state.offset + state.limit };
}

export function prevPage(state: PageState): PageState {
  if (!hasPrev(state)) {
    return state;
  }
  return { ...state, offset: Math.max(0, state.offset - state.limit) };
}

export function pageLabel(state: PageState): string {
  if (state.total === 0) {
    return "0 of 0";
  }
  const first = state.offset + 1;
  const last = Math.min(state.offset + state.limit, state.total);
  return `${first}-${last} of ${state.total}`;
}
