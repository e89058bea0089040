// Integration diff preview: renders the reference section the engine
// would append for a decision, so the reviewer sees the exact edit
// before submitting. Mirrors the engine's documented section format;
// the preview is advisory, the engine's write is authoritative.

import { applySubstitutions } from './decisions.js';
import type { CandidateDraft } from './drafts.js';
import type { EntryDoc, PatternCandidate } from './types.js';

export function tagKey(signature: string[]): string {
  const categoryTags = new Set([
    'OPERATIONAL', 'DECISION', 'REASONING', 'PATTERN', 'ERROR', 'CONTEXT', 'INSIGHT',
  ]);
  const content = signature.filter((t) => !categoryTags.has(t));
  return (content.length ? content : signature).join('-');
}

export function referenceFilename(signature: string[]): string {
  return tagKey(signature).toLowerCase() + '.md';
}

function snippet(body: string, width = 120): string {
  const flat = body.split(/\s+/).join(' ').trim();
  return flat.length <= width ? flat : flat.slice(0, width - 3).trimEnd() + '...';
}

export function previewSection(
  candidate: PatternCandidate,
  draft: CandidateDraft,
  batchId: string,
  supportEntries: EntryDoc[],
): string {
  const baseText =
    draft.verdict === 'edit' && draft.edited_text ? draft.edited_text : candidate.exemplar_text;
  const body = applySubstitutions(baseText, draft.generalization_notes);
  const heading = candidate.tag_signature.map((t) => `[${t}]`).join('');
  const examples = supportEntries
    .slice(0, 3)
    .map((entry) => `- ${entry.id}: ${snippet(entry.body)}`);
  const decontextualized = Object.keys(draft.generalization_notes).length > 0;

  const lines = [
    `## ${heading}`,
    '',
    body,
    '',
    '### Conditions',
    '',
    '- (unspecified)',
    '',
  ];
  if (examples.length) {
    lines.push('### Examples', '', ...examples, '');
  }
  lines.push('### Provenance', '', ...candidate.support_entries.map((id) => `- ${id}`), '');
  lines.push(
    `<!-- nfd:section batch=${batchId} category=? ` +
      `decontextualized=${decontextualized} validated=? -->`,
  );
  return lines.join('\n') + '\n';
}
