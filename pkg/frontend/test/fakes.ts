// In-memory gateway double for board tests. Serves the real shared
// decisions schema from the engine package so the contract under test
// is the actual one.

import { existsSync, readFileSync } from 'node:fs';
import { join, resolve } from 'node:path';

import type { FetchLike } from '../src/api';
import type { DecisionsDocument, ReviewBatch, SubmitResult } from '../src/types';

function sharedSchemaPath(): string {
  // the engine package sits one level above frontend/
  let dir = process.cwd();
  for (let depth = 0; depth < 4; depth++) {
    const candidate = join(dir, 'src', 'nfd', 'schemas', 'decisions.json');
    if (existsSync(candidate)) return candidate;
    dir = resolve(dir, '..');
  }
  throw new Error('shared decisions schema not found relative to ' + process.cwd());
}

export const SHARED_SCHEMA: Record<string, unknown> = JSON.parse(
  readFileSync(sharedSchemaPath(), 'utf-8'),
);

export function fixtureBatch(): ReviewBatch {
  return {
    batch_id: 'CC-20250601-1',
    created_at: '2025-06-01T12:00:00Z',
    scope: { required_tags: ['ERROR'] },
    status: 'pending',
    candidates: [
      {
        id: 'c1',
        tag_signature: ['ERROR', 'SECTOR-SPECIFIC'],
        support_entries: ['2025-01-06#0002', '2025-01-07#0003', '2025-01-08#0004'],
        score: 1.73,
        exemplar_text: 'applied revenue growth weighting to a capex heavy name',
        proposed_category: 'ErrorPattern',
        weak: false,
      },
      {
        id: 'c2',
        tag_signature: ['CONTEXT'],
        support_entries: ['2025-01-06#0003', '2025-01-07#0004', '2025-01-11#0004'],
        score: 0.525,
        exemplar_text: 'rates held steady; market breadth narrow',
        proposed_category: 'CaseLibraryEntry',
        weak: true,
      },
    ],
  };
}

export class FakeGateway {
  batch: ReviewBatch | null = fixtureBatch();
  posted: DecisionsDocument[] = [];
  postStatus = 200;
  submitResult: SubmitResult = {
    batch_id: 'CC-20250601-1',
    status: 'integrated',
    outcomes: [
      { candidate_id: 'c1', status: 'validated' },
      { candidate_id: 'c2', status: 'rejected' },
    ],
    drafts_validated: 1,
    integration: {
      batch_id: 'CC-20250601-1',
      assets_written: 1,
      entries_consolidated: 3,
      principles_updated: 0,
      eta: 0.2667,
      value_before: 0.39,
      value_after: 0.41,
    },
  };

  readonly fetch: FetchLike = async (input, init) => {
    const url = new URL(input, 'http://board.test');
    const path = url.pathname;
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (path === '/api/schemas/decisions') return json(SHARED_SCHEMA);
    if (path === '/api/batches') {
      const pending = this.batch && this.batch.status === 'pending' ? [this.batch] : [];
      return json(url.searchParams.get('status') === 'pending' ? pending : [this.batch]);
    }
    if (path.match(/^\/api\/batches\/[^/]+$/)) {
      if (!this.batch) return json({ status: 404, code: 'unknown_batch', message: 'no batch' }, 404);
      return json(this.batch);
    }
    if (path.match(/^\/api\/batches\/[^/]+\/decisions$/) && init?.method === 'POST') {
      if (this.postStatus !== 200) {
        return json(
          { status: this.postStatus, code: 'batch_not_pending', message: 'decided elsewhere' },
          this.postStatus,
        );
      }
      this.posted.push(JSON.parse(String(init.body)) as DecisionsDocument);
      if (this.batch) this.batch = { ...this.batch, status: 'integrated' };
      return json(this.submitResult);
    }
    if (path === '/api/metrics') {
      return json({
        breadth: 0.6779,
        structure_raw: 0.8,
        structure_norm: 0.04,
        align: 0.5,
        value: 0.4062,
        weights: { alpha: 1 / 3, beta: 1 / 3, gamma: 1 / 3 },
        eta_history: [
          { batch_id: 'CC-20250501-1', integrated_at: '2025-05-01T12:00:00Z', eta: 0.2 },
          { batch_id: 'CC-20250601-1', integrated_at: '2025-06-01T12:00:00Z', eta: 0.2667 },
        ],
      });
    }
    if (path === '/api/entries') {
      const ids = (url.searchParams.get('ids') ?? '').split(',').filter(Boolean);
      return json(
        ids.map((id) => ({
          id,
          date: id.slice(0, 10),
          timestamp: null,
          tags: ['ERROR', 'SECTOR-SPECIFIC'],
          category: 'ErrorRecord',
          body: `support body for ${id}`,
        })),
      );
    }
    if (path.startsWith('/api/skills/')) {
      return json({ status: 404, code: 'unknown_skill', message: 'no such skill' }, 404);
    }
    return json({ status: 404, code: 'not_found', message: path }, 404);
  };
}

export class MemoryStorage {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
