// Local persistence for in-progress reviews: decision drafts survive a
// page reload but are discarded when the batch is decided elsewhere.

import type { Verdict } from './types.js';

export interface CandidateDraft {
  verdict?: Verdict;
  edited_text?: string;
  target_skill?: string;
  principle_text?: string;
  generalization_notes: Record<string, string>;
}

export interface BoardDraft {
  batch_id: string;
  candidates: Record<string, CandidateDraft>;
  savedAt: string;
}

const PREFIX = 'nfd-review-draft:';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class DraftStore {
  constructor(private readonly storage: StorageLike) {}

  load(batchId: string): BoardDraft | null {
    try {
      const raw = this.storage.getItem(PREFIX + batchId);
      if (!raw) return null;
      const parsed = JSON.parse(raw) as BoardDraft;
      if (parsed && parsed.batch_id === batchId && typeof parsed.candidates === 'object') {
        return parsed;
      }
      return null;
    } catch {
      return null;
    }
  }

  save(draft: BoardDraft): void {
    try {
      draft.savedAt = new Date().toISOString();
      this.storage.setItem(PREFIX + draft.batch_id, JSON.stringify(draft));
    } catch {
      // storage quota or disabled storage: drafts just stop persisting
    }
  }

  clear(batchId: string): void {
    try {
      this.storage.removeItem(PREFIX + batchId);
    } catch {
      // ignore
    }
  }
}

export function emptyDraft(batchId: string, candidateIds: string[]): BoardDraft {
  const candidates: Record<string, CandidateDraft> = {};
  for (const id of candidateIds) {
    candidates[id] = { generalization_notes: {} };
  }
  return { batch_id: batchId, candidates, savedAt: new Date().toISOString() };
}
