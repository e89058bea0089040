// The review board: evidence-first candidate cards, local decision
// drafts, schema-checked submission, and an integration result view.
// The server stays the single source of truth; a batch decided
// elsewhere mid-review reloads the board and discards local drafts.

import { ApiError, GatewayClient } from './api.js';
import { buildDecisionsDocument, draftComplete } from './decisions.js';
import { BoardDraft, DraftStore, emptyDraft } from './drafts.js';
import { previewSection, referenceFilename } from './preview.js';
import { validateAgainstSchema } from './schema.js';
import type { EntryDoc, MetricsDoc, ReviewBatch, SubmitResult, Verdict } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ReviewBoard {
  private batch: ReviewBatch | null = null;
  private draft: BoardDraft | null = null;
  private schema: Record<string, unknown> | null = null;
  private notice = '';

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
    private readonly drafts: DraftStore,
  ) {}

  async load(): Promise<void> {
    this.schema = await this.client.decisionsSchema().catch(() => null);
    const pending = await this.client.pendingBatches();
    this.batch = pending.length ? pending[0] : null;
    if (this.batch) {
      this.draft =
        this.drafts.load(this.batch.batch_id) ??
        emptyDraft(this.batch.batch_id, this.batch.candidates.map((c) => c.id));
      for (const candidate of this.batch.candidates) {
        if (!this.draft.candidates[candidate.id]) {
          this.draft.candidates[candidate.id] = { generalization_notes: {} };
        }
      }
    } else {
      this.draft = null;
    }
    this.render();
    void this.renderMetrics();
  }

  private saveDraft(): void {
    if (this.draft) this.drafts.save(this.draft);
  }

  // ------------------------------------------------------------ rendering

  render(): void {
    this.root.textContent = '';
    const header = el('header');
    header.append(el('h1', {}, 'Crystallization review'));
    if (this.notice) {
      header.append(el('p', { class: 'notice', 'data-testid': 'notice' }, this.notice));
      this.notice = '';
    }
    this.root.append(header);

    if (!this.batch || !this.draft) {
      this.root.append(el('p', { 'data-testid': 'empty' }, 'No pending batches.'));
      this.root.append(el('section', { id: 'metrics' }));
      return;
    }

    const batchBox = el('section', { 'data-testid': 'batch' });
    batchBox.append(
      el('h2', {}, `${this.batch.batch_id} — ${this.batch.candidates.length} candidate(s)`),
    );
    for (const candidate of this.batch.candidates) {
      batchBox.append(this.renderCandidate(candidate.id));
    }
    batchBox.append(this.renderSubmitRow());
    this.root.append(batchBox);
    this.root.append(el('section', { id: 'metrics' }));
  }

  private renderCandidate(candidateId: string): HTMLElement {
    const batch = this.batch!;
    const draft = this.draft!;
    const candidate = batch.candidates.find((c) => c.id === candidateId)!;
    const d = draft.candidates[candidateId];

    const card = el('article', { class: 'candidate', 'data-testid': `candidate-${candidateId}` });
    const title = candidate.tag_signature.map((t) => `[${t}]`).join('');
    card.append(
      el('h3', {}, `${candidateId} ${title}${candidate.weak ? ' (weak)' : ''}`),
      el(
        'p',
        { class: 'meta' },
        `score ${candidate.score.toFixed(4)} · support ${candidate.support_entries.length} · ` +
          `proposed ${candidate.proposed_category} · target file ${referenceFilename(candidate.tag_signature)}`,
      ),
      el('blockquote', { class: 'exemplar' }, candidate.exemplar_text),
    );

    const verdictRow = el('div', { class: 'verdicts' });
    (['approve', 'reject', 'edit'] as Verdict[]).forEach((verdict) => {
      const button = el('button', { 'data-testid': `${verdict}-${candidateId}` }, verdict);
      if (d.verdict === verdict) button.setAttribute('data-selected', 'true');
      button.addEventListener('click', () => {
        d.verdict = verdict;
        this.saveDraft();
        this.render();
      });
      verdictRow.append(button);
    });
    card.append(verdictRow);

    if (d.verdict === 'edit') {
      const editor = el('textarea', { 'data-testid': `edited-${candidateId}` });
      editor.value = d.edited_text ?? candidate.exemplar_text;
      if (d.edited_text === undefined) d.edited_text = candidate.exemplar_text;
      editor.addEventListener('input', () => {
        d.edited_text = editor.value;
        this.saveDraft();
      });
      card.append(el('label', {}, 'edited text'), editor);
    }

    if (d.verdict === 'approve' || d.verdict === 'edit') {
      const skill = el('input', {
        'data-testid': `skill-${candidateId}`,
        placeholder: 'target skill (kebab-case)',
      });
      skill.value = d.target_skill ?? '';
      skill.addEventListener('input', () => {
        d.target_skill = skill.value;
        this.saveDraft();
        this.refreshSubmit();
      });
      const principle = el('input', {
        'data-testid': `principle-${candidateId}`,
        placeholder: 'or principle text',
      });
      principle.value = d.principle_text ?? '';
      principle.addEventListener('input', () => {
        d.principle_text = principle.value;
        this.saveDraft();
        this.refreshSubmit();
      });
      card.append(el('label', {}, 'route to'), skill, principle);
      card.append(this.renderSubstitutions(candidateId));

      const previewButton = el('button', { 'data-testid': `preview-${candidateId}` }, 'preview');
      const previewBox = el('pre', {
        class: 'preview',
        'data-testid': `preview-box-${candidateId}`,
        hidden: 'hidden',
      });
      previewButton.addEventListener('click', () => {
        void this.showPreview(candidateId, previewBox);
      });
      card.append(previewButton, previewBox);
    }

    const supportButton = el('button', { 'data-testid': `support-${candidateId}` }, 'show support');
    const supportBox = el('div', { class: 'support', 'data-testid': `support-box-${candidateId}` });
    supportButton.addEventListener('click', () => {
      void this.showSupport(candidateId, supportBox);
    });
    card.append(supportButton, supportBox);
    return card;
  }

  private renderSubstitutions(candidateId: string): HTMLElement {
    const d = this.draft!.candidates[candidateId];
    const box = el('div', { class: 'substitutions' });
    box.append(el('label', {}, 'generalize (literal → placeholder)'));
    for (const [literal, placeholder] of Object.entries(d.generalization_notes)) {
      const row = el('div', { class: 'sub-row' }, `${literal} → ${placeholder} `);
      const remove = el('button', {}, 'remove');
      remove.addEventListener('click', () => {
        delete d.generalization_notes[literal];
        this.saveDraft();
        this.render();
      });
      row.append(remove);
      box.append(row);
    }
    const literal = el('input', {
      'data-testid': `sub-literal-${candidateId}`,
      placeholder: 'literal',
    });
    const placeholder = el('input', {
      'data-testid': `sub-placeholder-${candidateId}`,
      placeholder: 'placeholder',
    });
    const add = el('button', { 'data-testid': `sub-add-${candidateId}` }, 'add');
    add.addEventListener('click', () => {
      if (literal.value) {
        d.generalization_notes[literal.value] = placeholder.value;
        this.saveDraft();
        this.render();
      }
    });
    box.append(literal, placeholder, add);
    return box;
  }

  private renderSubmitRow(): HTMLElement {
    const row = el('div', { class: 'submit-row' });
    const integrate = el('input', { type: 'checkbox', 'data-testid': 'integrate-toggle' });
    integrate.checked = true;
    const submit = el('button', { 'data-testid': 'submit' }, 'submit decisions');
    submit.disabled = !draftComplete(this.batch!, this.draft!);
    submit.addEventListener('click', () => {
      void this.submit(integrate.checked);
    });
    const label = el('label', {}, ' integrate after deciding');
    label.prepend(integrate);
    row.append(submit, label);
    return row;
  }

  private refreshSubmit(): void {
    const submit = this.root.querySelector<HTMLButtonElement>('[data-testid="submit"]');
    if (submit && this.batch && this.draft) {
      submit.disabled = !draftComplete(this.batch, this.draft);
    }
  }

  private async showSupport(candidateId: string, box: HTMLElement): Promise<void> {
    const candidate = this.batch!.candidates.find((c) => c.id === candidateId)!;
    const entries = await this.client.entriesByIds(candidate.support_entries);
    box.textContent = '';
    for (const entry of entries) {
      box.append(el('p', { class: 'entry' }, `${entry.id} ${entry.tags.map((t) => `[${t}]`).join('')} ${entry.body}`));
    }
  }

  private async showPreview(candidateId: string, box: HTMLElement): Promise<void> {
    const candidate = this.batch!.candidates.find((c) => c.id === candidateId)!;
    const d = this.draft!.candidates[candidateId];
    let support: EntryDoc[] = [];
    try {
      support = await this.client.entriesByIds(candidate.support_entries.slice(0, 3));
    } catch {
      support = [];
    }
    const section = previewSection(candidate, d, this.batch!.batch_id, support);
    let before = '(new reference file)';
    if (d.target_skill) {
      const skill = await this.client.skill(d.target_skill.trim());
      const filename = referenceFilename(candidate.tag_signature);
      if (skill && skill.references[filename]) before = skill.references[filename];
    }
    box.textContent = `--- current ---\n${before}\n--- after integrate ---\n${section}`;
    box.removeAttribute('hidden');
  }

  // ------------------------------------------------------------ submission

  private async submit(integrate: boolean): Promise<void> {
    if (!this.batch || !this.draft) return;
    const doc = buildDecisionsDocument(this.batch, this.draft);
    if (this.schema) {
      const violations = validateAgainstSchema(doc, this.schema);
      if (violations.length) {
        this.notice = `decisions document invalid: ${violations[0].path} ${violations[0].message}`;
        this.render();
        return;
      }
    }
    try {
      const result = await this.client.submitDecisions(doc, integrate);
      this.drafts.clear(this.batch.batch_id);
      this.renderResult(result);
    } catch (err) {
      if (err instanceof ApiError && (err.status === 409 || err.status === 423)) {
        // decided elsewhere (or locked): reload, local drafts are stale
        this.drafts.clear(this.batch.batch_id);
        this.notice = `batch ${this.batch.batch_id} changed elsewhere (${err.code}); drafts discarded`;
        await this.load();
        return;
      }
      this.notice = err instanceof Error ? err.message : String(err);
      this.render();
    }
  }

  private renderResult(result: SubmitResult): void {
    this.root.textContent = '';
    const box = el('section', { 'data-testid': 'result' });
    box.append(el('h2', {}, `${result.batch_id}: ${result.status}`));
    const list = el('ul');
    for (const outcome of result.outcomes) {
      list.append(
        el(
          'li',
          { 'data-testid': `outcome-${outcome.candidate_id}` },
          `${outcome.candidate_id}: ${outcome.status}${outcome.reason ? ` (${outcome.reason})` : ''}`,
        ),
      );
    }
    box.append(list);
    if (result.integration) {
      const r = result.integration;
      const eta = r.eta === null ? 'n/a' : r.eta.toFixed(6);
      const delta =
        r.value_after !== undefined && r.value_before !== undefined
          ? ` · value ${r.value_before.toFixed(4)} → ${r.value_after.toFixed(4)}`
          : '';
      box.append(
        el(
          'p',
          { 'data-testid': 'integration' },
          `integrated: ${r.assets_written} asset(s), ${r.entries_consolidated} entries consolidated, ` +
            `${r.principles_updated} principle(s), eta ${eta}${delta}`,
        ),
      );
    }
    const back = el('button', { 'data-testid': 'back' }, 'back to queue');
    back.addEventListener('click', () => void this.load());
    box.append(back);
    this.root.append(box);
    this.root.append(el('section', { id: 'metrics' }));
    void this.renderMetrics();
  }

  // --------------------------------------------------------------- metrics

  private async renderMetrics(): Promise<void> {
    const host = this.root.querySelector('#metrics');
    if (!host) return;
    let doc: MetricsDoc;
    try {
      doc = await this.client.metrics();
    } catch {
      return;
    }
    host.textContent = '';
    host.append(el('h2', {}, 'Knowledge value'));
    const grid = el('p', { 'data-testid': 'metrics' });
    grid.textContent =
      `breadth ${doc.breadth.toFixed(4)} · structure ${doc.structure_norm.toFixed(4)} · ` +
      `align ${doc.align.toFixed(4)} · value ${doc.value.toFixed(4)}`;
    host.append(grid);
    const etas = doc.eta_history.filter((p) => p.eta !== null);
    if (etas.length) {
      host.append(this.sparkline(etas.map((p) => p.eta as number)));
    }
  }

  private sparkline(values: number[]): SVGSVGElement {
    const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
    svg.setAttribute('width', '160');
    svg.setAttribute('height', '32');
    svg.setAttribute('data-testid', 'eta-sparkline');
    const max = Math.max(...values, 1e-9);
    const step = values.length > 1 ? 150 / (values.length - 1) : 0;
    const points = values
      .map((v, i) => `${5 + i * step},${28 - (v / max) * 24}`)
      .join(' ');
    const line = document.createElementNS('http://www.w3.org/2000/svg', 'polyline');
    line.setAttribute('points', points);
    line.setAttribute('fill', 'none');
    line.setAttribute('stroke', 'currentColor');
    svg.append(line);
    return svg;
  }
}
