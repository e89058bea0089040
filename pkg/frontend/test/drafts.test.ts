import { describe, expect, it } from 'vitest';

import { DraftStore, emptyDraft } from '../src/drafts';
import { MemoryStorage } from './fakes';

describe('draft persistence', () => {
  it('round-trips a draft through storage', () => {
    const store = new DraftStore(new MemoryStorage());
    const draft = emptyDraft('CC-20250601-1', ['c1']);
    draft.candidates.c1.verdict = 'approve';
    draft.candidates.c1.target_skill = 'sector-analysis';
    store.save(draft);
    const loaded = store.load('CC-20250601-1');
    expect(loaded?.candidates.c1.verdict).toBe('approve');
    expect(loaded?.candidates.c1.target_skill).toBe('sector-analysis');
  });

  it('returns null for absent, corrupt or mismatched drafts', () => {
    const storage = new MemoryStorage();
    const store = new DraftStore(storage);
    expect(store.load('CC-20250601-1')).toBeNull();
    storage.setItem('nfd-review-draft:CC-20250601-1', '{corrupt');
    expect(store.load('CC-20250601-1')).toBeNull();
    storage.setItem(
      'nfd-review-draft:CC-20250601-1',
      JSON.stringify({ batch_id: 'CC-20990101-9', candidates: {} }),
    );
    expect(store.load('CC-20250601-1')).toBeNull();
  });

  it('clear removes the stored draft', () => {
    const storage = new MemoryStorage();
    const store = new DraftStore(storage);
    store.save(emptyDraft('CC-20250601-1', ['c1']));
    store.clear('CC-20250601-1');
    expect(store.load('CC-20250601-1')).toBeNull();
  });
});
