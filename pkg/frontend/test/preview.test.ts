import { describe, expect, it } from 'vitest';

import { previewSection, referenceFilename, tagKey } from '../src/preview';
import { fixtureBatch } from './fakes';

describe('integration preview', () => {
  it('derives the reference filename by dropping category tags', () => {
    expect(tagKey(['BINARY-EVENT', 'INSIGHT', 'STRATEGY'])).toBe('BINARY-EVENT-STRATEGY');
    expect(referenceFilename(['BINARY-EVENT', 'INSIGHT', 'STRATEGY'])).toBe(
      'binary-event-strategy.md',
    );
    expect(referenceFilename(['ERROR'])).toBe('error.md');
  });

  it('renders the section shape the engine appends', () => {
    const candidate = fixtureBatch().candidates[0];
    const section = previewSection(
      candidate,
      { verdict: 'approve', generalization_notes: { capex: '<driver>' } },
      'CC-20250601-1',
      [
        {
          id: '2025-01-06#0002',
          date: '2025-01-06',
          timestamp: null,
          tags: ['ERROR'],
          category: 'ErrorRecord',
          body: 'applied revenue growth weighting to a capex heavy name',
        },
      ],
    );
    expect(section).toContain('## [ERROR][SECTOR-SPECIFIC]');
    // the body is generalized; evidence snippets stay verbatim
    expect(section).toContain('applied revenue growth weighting to a <driver> heavy name');
    expect(section).toContain('- 2025-01-06#0002: applied revenue growth weighting to a capex heavy name');
    expect(section).toContain('### Conditions');
    expect(section).toContain('### Provenance');
    expect(section).toContain('- 2025-01-06#0002');
    expect(section).toContain('decontextualized=true');
  });
});
