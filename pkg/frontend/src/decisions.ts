// Mapping from board draft state to the decisions document the gateway
// accepts. The document is byte-compatible with the CLI/file path.

import type { BoardDraft, CandidateDraft } from './drafts.js';
import type { Decision, DecisionsDocument, ReviewBatch } from './types.js';

export function draftComplete(batch: ReviewBatch, draft: BoardDraft): boolean {
  return batch.candidates.every((candidate) => {
    const d = draft.candidates[candidate.id];
    return d !== undefined && verdictReady(d);
  });
}

function verdictReady(d: CandidateDraft): boolean {
  if (!d.verdict) return false;
  if (d.verdict === 'reject') return true;
  if (d.verdict === 'edit' && !d.edited_text?.trim()) return false;
  // approve/edit must route somewhere: a skill or a principle
  return Boolean(d.target_skill?.trim() || d.principle_text?.trim());
}

export function buildDecisionsDocument(batch: ReviewBatch, draft: BoardDraft): DecisionsDocument {
  const decisions: Decision[] = batch.candidates.map((candidate) => {
    const d = draft.candidates[candidate.id];
    if (!d || !d.verdict) {
      throw new Error(`candidate ${candidate.id} has no verdict`);
    }
    const decision: Decision = { candidate_id: candidate.id, verdict: d.verdict };
    if (d.verdict === 'reject') return decision;
    if (d.verdict === 'edit') decision.edited_text = d.edited_text?.trim();
    if (d.principle_text?.trim()) {
      decision.principle_text = d.principle_text.trim();
    } else if (d.target_skill?.trim()) {
      decision.target_skill = d.target_skill.trim();
    }
    if (Object.keys(d.generalization_notes).length > 0) {
      decision.generalization_notes = { ...d.generalization_notes };
    }
    return decision;
  });
  return { batch_id: batch.batch_id, decisions };
}

export function applySubstitutions(text: string, notes: Record<string, string>): string {
  let out = text;
  for (const literal of Object.keys(notes).sort()) {
    out = out.split(literal).join(notes[literal]);
  }
  return out;
}
