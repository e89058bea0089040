// Wire formats served by the gateway. These mirror the on-disk batch,
// decision and history documents; the decisions document additionally
// validates against the schema served at /api/schemas/decisions.

export interface PatternCandidate {
  id: string;
  tag_signature: string[];
  support_entries: string[];
  score: number;
  exemplar_text: string;
  proposed_category: string;
  weak: boolean;
}

export type BatchStatus = 'pending' | 'decided' | 'integrated';

export interface ReviewBatch {
  batch_id: string;
  created_at: string;
  scope: Record<string, unknown>;
  candidates: PatternCandidate[];
  status: BatchStatus;
  outcomes?: CandidateOutcome[];
}

export interface CandidateOutcome {
  candidate_id: string;
  status: 'validated' | 'dropped' | 'rejected';
  reason?: string;
}

export type Verdict = 'approve' | 'reject' | 'edit';

export interface Decision {
  candidate_id: string;
  verdict: Verdict;
  edited_text?: string;
  target_skill?: string;
  generalization_notes?: Record<string, string>;
  principle_text?: string;
}

export interface DecisionsDocument {
  batch_id: string;
  decisions: Decision[];
}

export interface IntegrationResult {
  batch_id: string;
  assets_written: number;
  entries_consolidated: number;
  principles_updated: number;
  eta: number | null;
  value_before?: number;
  value_after?: number;
}

export interface SubmitResult {
  batch_id: string;
  status: BatchStatus;
  outcomes: CandidateOutcome[];
  drafts_validated: number;
  integration?: IntegrationResult;
}

export interface EtaPoint {
  batch_id: string;
  integrated_at: string;
  eta: number | null;
}

export interface MetricsDoc {
  breadth: number;
  structure_raw: number;
  structure_norm: number;
  align: number;
  value: number;
  weights: { alpha: number; beta: number; gamma: number };
  eta_history: EtaPoint[];
}

export interface EntryDoc {
  id: string;
  date: string;
  timestamp: string | null;
  tags: string[];
  category: string;
  body: string;
  snippet?: string;
}

export interface SkillDoc {
  name: string;
  instructions: string;
  references: Record<string, string>;
  versions: unknown[];
  provenance: string[];
  flags: Record<string, boolean>;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}
