/**
 * Browser bootstrap: wires the views to a live review service.
 *
 * Thin by design: every state transition lives in ReviewSession and the
 * pure view functions, which is where the tests are. Configuration is a
 * single value: the service base URL (?service=...) with same-origin
 * default.
 */

import { ApiClient } from "./api.js";
import { DraftStore, MemoryStorage, type KeyValueStorage } from "./drafts.js";
import { ReviewSession } from "./session.js";
import { nextPage, prevPage, type PageState } from "./pagination.js";
import { renderIncidentList } from "./views/incidentList.js";
import { renderTranscriptView } from "./views/transcriptView.js";
import type { AudioRefs, IncidentFilter, IncidentPage } from "./types.js";

function storage(): KeyValueStorage {
  try {
    window.localStorage.setItem("bwckit-probe", "1");
    window.localStorage.removeItem("bwckit-probe");
    return window.localStorage;
  } catch {
    return new MemoryStorage();
  }
}

export function bootstrap(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("service") ?? "";
  const reviewerId = params.get("reviewer") ?? "anonymous";
  const api = new ApiClient(baseUrl, (input, init) => fetch(input, init), reviewerId);
  const session = new ReviewSession(api, new DraftStore(storage()), reviewerId);

  let page: IncidentPage | null = null;
  let listError: string | null = null;
  let audio: AudioRefs | undefined;
  let filter: IncidentFilter = { offset: 0, limit: 25 };
  let mode: "list" | "transcript" = "list";

  async function loadList(): Promise<void> {
    try {
      page = await api.listIncidents(filter);
      listError = null;
    } catch (error) {
      listError = error instanceof Error ? error.message : String(error);
    }
    render();
  }

  async function openIncident(assetId: string): Promise<void> {
    await session.open(assetId);
    try {
      audio = await api.fetchAudioRefs(assetId);
    } catch {
      audio = undefined;
    }
    mode = "transcript";
    render();
  }

  function render(): void {
    root.innerHTML =
      mode === "list"
        ? renderIncidentList({ page, error: listError })
        : renderTranscriptView(session, audio);
  }

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    const row = target.closest<HTMLElement>(".incident-row");
    if (row?.dataset.assetId && !action) {
      void openIncident(row.dataset.assetId);
      return;
    }
    const pageState: PageState | null = page
      ? { offset: page.offset, limit: page.limit, total: page.total }
      : null;
    switch (action) {
      case "retry":
        void loadList();
        break;
      case "next-page":
        if (pageState) {
          filter = { ...filter, offset: nextPage(pageState).offset };
          void loadList();
        }
        break;
      case "prev-page":
        if (pageState) {
          filter = { ...filter, offset: prevPage(pageState).offset };
          void loadList();
        }
        break;
      case "toggle-role":
        session.toggleRole(Number(target.dataset.speaker));
        render();
        break;
      case "submit":
        void session.submit().then(render);
        break;
      case "adopt-current":
        void session.adoptCurrent().then(render);
        break;
      case "discard-pending":
        session.discardPending();
        render();
        break;
    }
  });

  root.addEventListener(
    "blur",
    (event) => {
      const target = event.target as HTMLElement;
      const index = target.dataset.segmentText;
      if (index !== undefined && mode === "transcript") {
        session.editSegment(Number(index), target.textContent ?? "");
        render();
      }
    },
    true,
  );

  void loadList();
}

declare global {
  interface Window {
    bwckitBootstrap: typeof bootstrap;
  }
}

if (typeof window !== "undefined") {
  window.bwckitBootstrap = bootstrap;
}
