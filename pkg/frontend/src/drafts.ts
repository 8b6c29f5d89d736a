/**
 * Local draft persistence for pending (unsubmitted) edits.
 *
 * Drafts are keyed by (incident, revision): a draft only restores onto
 * the exact transcript revision it was written against, so a reload can
 * never silently rebase edits onto content the reviewer hasn't seen.
 */

import type { PendingEdit } from "./session.js";

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** In-memory stand-in for environments without window.localStorage. */
export class MemoryStorage implements KeyValueStorage {
  private data = new Map<string, string>();

  getItem(key: string): string | null {
    return this.data.has(key) ? this.data.get(key)! : null;
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }

  removeItem(key: string): void {
    this.data.delete(key);
  }
}

const PREFIX = "bwckit-draft";

export class DraftStore {
  constructor(private readonly storage: KeyValueStorage) {}

  private key(incidentId: string, revision: number): string {
    return `${PREFIX}:${incidentId}:${revision}`;
  }

  save(incidentId: string, revision: number, edits: PendingEdit[]): void {
    if (edits.length === 0) {
      this.clear(incidentId, revision);
      return;
    }
    this.storage.setItem(this.key(incidentId, revision), JSON.stringify(edits));
  }

  load(incidentId: string, revision: number): PendingEdit[] | null {
    const raw = this.storage.getItem(this.key(incidentId, revision));
    if (raw === null) {
      return null;
    }
    try {
      return JSON.parse(raw) as PendingEdit[];
    } catch {
      return null;
    }
  }

  clear(incidentId: string, revision: number): void {
    this.storage.removeItem(this.key(incidentId, revision));
  }
}
