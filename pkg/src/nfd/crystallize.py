"""The crystallization pipeline: scope, extract, review, validate, integrate.

Pattern extraction is deterministic and explainable: entries group by
exact tag signature, pairwise cosine similarity over term-frequency
vectors builds a graph, and maximal connected components above the
support floor become candidates. Low-similarity groups still surface as
flagged weak candidates so the reviewer sees regularities they may not
have articulated yet.

Nothing reaches the skill layer or the constitution without a decided
review batch: the human gate is the only write path.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .errors import (
    BatchNotDecided,
    BatchNotPending,
    DecisionsInvalid,
    EmptyScope,
    MissingDecision,
    OverlappingPendingBatch,
    UnknownBatch,
    UnknownTargetSkill,
)
from .index import tokenize
from .metrics import structure_raw
from .model import (
    TAG_TO_CATEGORY,
    Category,
    ConsolidationRecord,
    EngineConfig,
    ExperientialCorpus,
    ExperientialEntry,
    KnowledgeState,
    PatternCandidate,
    Principle,
    ReferenceSection,
    ReviewBatch,
    Scope,
    SkillAsset,
    VersionRecord,
    parse_entry_id,
    render_reference_section,
)
from .workspace import SKILL_TEMPLATE, load_state, persist_state, workspace_lock

BATCH_ID_RE = re.compile(r"^CC-(\d{8})-(\d+)$")
SKILL_NAME_OK = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")

ASSET_KIND_SKILL_REFERENCE = "SkillReference"
ASSET_KIND_ERROR_PATTERN = "ErrorPattern"
ASSET_KIND_CASE_LIBRARY = "CaseLibraryEntry"
ASSET_KIND_PRINCIPLE = "PrincipleUpdate"

_CATEGORY_TO_KIND = {
    Category.ERROR_RECORD: ASSET_KIND_ERROR_PATTERN,
    Category.INSIGHT_FRAGMENT: ASSET_KIND_PRINCIPLE,
    Category.OPERATIONAL_RECORD: ASSET_KIND_CASE_LIBRARY,
    Category.CONTEXTUAL_ANNOTATION: ASSET_KIND_CASE_LIBRARY,
    Category.REASONING_TRACE: ASSET_KIND_SKILL_REFERENCE,
    Category.PATTERN_OBSERVATION: ASSET_KIND_SKILL_REFERENCE,
}


def now_iso(now: datetime | None = None) -> str:
    now = now or datetime.now(timezone.utc)
    if now.tzinfo is not None:
        now = now.astimezone(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_iso(stamp: str) -> datetime:
    return datetime.strptime(stamp, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


def tf_vector(text: str) -> Counter:
    return Counter(tokenize(text))


def cosine(a: Counter, b: Counter) -> float:
    """Cosine similarity of term-frequency vectors; 0 for empty vectors."""
    if not a or not b:
        return 0.0
    dot = sum(count * b[term] for term, count in a.items())
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(c * c for c in a.values()))
    norm_b = math.sqrt(sum(c * c for c in b.values()))
    return dot / (norm_a * norm_b)


def tag_signature(entry: ExperientialEntry) -> tuple[str, ...]:
    return tuple(sorted(set(entry.tags)))


def tag_key(signature: tuple[str, ...] | list[str]) -> str:
    """Content key of a signature: category tags dropped, rest joined.

    [BINARY-EVENT, INSIGHT, STRATEGY] -> "BINARY-EVENT-STRATEGY"; a
    signature of category tags alone falls back to the full signature.
    """
    content = [t for t in signature if t not in TAG_TO_CATEGORY]
    return "-".join(content or list(signature))


def reference_filename(signature: tuple[str, ...] | list[str]) -> str:
    return tag_key(signature).lower() + ".md"


def heading_for(signature: tuple[str, ...] | list[str]) -> str:
    return "".join(f"[{t}]" for t in signature)


def scope_filter(
    corpus: ExperientialCorpus, scope: Scope
) -> list[ExperientialEntry]:
    """Select entries for crystallization, preserving corpus order.

    Consolidated entries are excluded unless the scope opts in.
    """
    if not scope.is_constrained():
        raise EmptyScope("scope has no constraints and no all-entries marker")
    required = set(scope.required_tags)
    categories = set(scope.categories)
    selected = []
    for entry in corpus.entries:
        if entry.consolidated_into is not None and not scope.include_consolidated:
            continue
        if scope.date_from and entry.date < scope.date_from:
            continue
        if scope.date_to and entry.date > scope.date_to:
            continue
        if required and not required.issubset(entry.tags):
            continue
        if categories and entry.category.value not in categories:
            continue
        selected.append(entry)
        if scope.max_entries and len(selected) >= scope.max_entries:
            break
    return selected


def _majority_category(entries: list[ExperientialEntry]) -> Category:
    counts = Counter(e.category for e in entries)
    best = max(counts.values())
    leaders = {c for c, n in counts.items() if n == best}
    if len(leaders) == 1:
        return leaders.pop()
    for entry in sorted(entries, key=lambda e: e.id):
        if entry.category in leaders:
            return entry.category
    return entries[0].category


def _components(ids: list[str], edges: dict[str, set[str]]) -> list[list[str]]:
    seen: set[str] = set()
    components = []
    for node in ids:
        if node in seen:
            continue
        stack = [node]
        seen.add(node)
        component = []
        while stack:
            current = stack.pop()
            component.append(current)
            for neighbor in sorted(edges.get(current, ())):
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        components.append(sorted(component))
    return components


def extract_patterns(
    entries: list[ExperientialEntry], config: EngineConfig
) -> list[PatternCandidate]:
    """Mine scoped entries for recurring regularities.

    Per exact tag signature: pairwise cosine similarity over TF vectors,
    edges at >= similarity_threshold, maximal connected components of
    size >= min_support become candidates scored |component| * mean
    pairwise similarity. Groups of size >= min_support whose overall
    mean similarity stays below the threshold additionally emit a
    flagged weak candidate scored |group| * threshold / 2.
    """
    theta = config.similarity_threshold
    groups: dict[tuple[str, ...], list[ExperientialEntry]] = {}
    for entry in entries:
        groups.setdefault(tag_signature(entry), []).append(entry)

    raw: list[tuple] = []
    for signature in sorted(groups):
        members = sorted(groups[signature], key=lambda e: parse_entry_id(e.id))
        vectors = {e.id: tf_vector(e.body) for e in members}
        bodies = {e.id: e.body for e in members}
        by_id = {e.id: e for e in members}
        ids = [e.id for e in members]

        sims: dict[frozenset, float] = {}
        edges: dict[str, set[str]] = {i: set() for i in ids}
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                sim = cosine(vectors[a], vectors[b])
                sims[frozenset((a, b))] = sim
                if sim >= theta:
                    edges[a].add(b)
                    edges[b].add(a)

        def mean_sim(subset: list[str]) -> float:
            if len(subset) < 2:
                return 1.0
            pairs = [
                sims[frozenset((a, b))]
                for i, a in enumerate(subset)
                for b in subset[i + 1:]
            ]
            return sum(pairs) / len(pairs)

        def pick_exemplar(component: list[str]) -> str:
            best_id, best_mean = component[0], -1.0
            for eid in component:
                mean = sum(
                    sims[frozenset((eid, other))] for other in component if other != eid
                ) / max(1, len(component) - 1)
                if mean > best_mean:  # strict: earliest id wins ties
                    best_id, best_mean = eid, mean
            return best_id

        for component in _components(ids, edges):
            if len(component) < config.min_support:
                continue
            score = len(component) * mean_sim(component)
            if score <= 0:
                continue
            exemplar = pick_exemplar(component)
            raw.append(
                (
                    score,
                    component[0],
                    signature,
                    component,
                    bodies[exemplar],
                    _majority_category([by_id[i] for i in component]),
                    False,
                )
            )

        if len(ids) >= config.min_support and len(ids) >= 2:
            group_mean = mean_sim(ids)
            if group_mean < theta:
                raw.append(
                    (
                        len(ids) * theta / 2.0,
                        ids[0],
                        signature,
                        ids,
                        bodies[ids[0]],
                        _majority_category(members),
                        True,
                    )
                )

    raw.sort(key=lambda item: (-item[0], parse_entry_id(item[1]), item[2]))
    candidates = []
    for n, (score, _first, signature, support, exemplar, category, weak) in enumerate(raw, 1):
        candidates.append(
            PatternCandidate(
                id=f"c{n}",
                tag_signature=list(signature),
                support_entries=list(support),
                score=score,
                exemplar_text=exemplar,
                proposed_category=_CATEGORY_TO_KIND[category],
                weak=weak,
            )
        )
    return candidates


def _next_batch_id(state: KnowledgeState, now: datetime) -> str:
    stamp = now.astimezone(timezone.utc).strftime("%Y%m%d")
    top = 0
    for batch_id in state.batches:
        m = BATCH_ID_RE.match(batch_id)
        if m and m.group(1) == stamp:
            top = max(top, int(m.group(2)))
    return f"CC-{stamp}-{top + 1}"


def open_batch(
    root: Path | str,
    scope: Scope,
    now: datetime | None = None,
    config_overrides: dict | None = None,
) -> ReviewBatch:
    """Run scope filter + pattern extraction and open a review batch.

    A batch with zero candidates needs no review and is written already
    decided. Overlapping an existing pending batch's entry set is
    refused.
    """
    root = Path(root)
    now = now or datetime.now(timezone.utc)
    with workspace_lock(root):
        state = load_state(root)
        config = state.config.with_overrides(config_overrides or {})
        selected = scope_filter(state.corpus, scope)
        selected_ids = {e.id for e in selected}
        for other in state.batches.values():
            if other.status != "pending":
                continue
            other_ids = {e.id for e in scope_filter(state.corpus, other.scope)}
            if selected_ids & other_ids:
                raise OverlappingPendingBatch(
                    f"scope overlaps pending batch {other.batch_id}"
                )
        candidates = extract_patterns(selected, config)
        batch = ReviewBatch(
            batch_id=_next_batch_id(state, now),
            created_at=now_iso(now),
            scope=scope,
            candidates=candidates,
            status="pending" if candidates else "decided",
        )
        state.batches[batch.batch_id] = batch
        persist_state(state, root)
    return batch


def _corpus_support(
    corpus: ExperientialCorpus,
    signature: tuple[str, ...],
    body: str,
    theta: float,
) -> int:
    """How many corpus entries share the signature and resemble the body."""
    vector = tf_vector(body)
    count = 0
    for entry in corpus.entries:
        if tag_signature(entry) != signature:
            continue
        if cosine(tf_vector(entry.body), vector) >= theta:
            count += 1
    return count


def _contradictions(corpus: ExperientialCorpus, key: str) -> int:
    marker = f"CONTRADICTS-{key}"
    return sum(1 for e in corpus.entries if marker in e.tags)


def _snippet(body: str, width: int = 120) -> str:
    flat = " ".join(body.split())
    return flat if len(flat) <= width else flat[: width - 3].rstrip() + "..."


def structure_asset(
    candidate: PatternCandidate,
    body: str,
    corpus: ExperientialCorpus,
) -> dict:
    """Format a validated candidate as a reference-section draft."""
    by_id = corpus.by_id()
    examples = []
    for eid in candidate.support_entries[:3]:
        entry = by_id.get(eid)
        if entry is not None:
            examples.append(f"{eid}: {_snippet(entry.body)}")
    support = [by_id[e] for e in candidate.support_entries if e in by_id]
    category = _majority_category(support) if support else Category.OPERATIONAL_RECORD
    return {
        "heading": heading_for(candidate.tag_signature),
        "filename": reference_filename(candidate.tag_signature),
        "body": body,
        "examples": examples,
        "provenance": list(candidate.support_entries),
        "category": category.value,
    }


def decontextualize(body: str, notes: dict[str, str] | None) -> tuple[str, bool]:
    """Apply reviewer-supplied literal -> placeholder substitutions."""
    if not notes:
        return body, False
    for literal in sorted(notes):
        body = body.replace(literal, notes[literal])
    return body, True


def apply_decisions(
    root: Path | str,
    batch_id: str,
    decisions_doc: dict,
    config_overrides: dict | None = None,
) -> list[dict]:
    """Apply a reviewed decisions document to a pending batch.

    Approve/edit decisions are structured, de-contextualized and then
    re-validated against the full corpus: signature-matching entries
    similar to the final body must reach min_support, and explicit
    contradiction tags must stay below it. Drafts failing the gate are
    dropped with a recorded reason. The batch moves to decided and the
    decisions document is written alongside it.
    """
    root = Path(root)
    with workspace_lock(root):
        state = load_state(root)
        config = state.config.with_overrides(config_overrides or {})
        batch = state.batches.get(batch_id)
        if batch is None:
            raise UnknownBatch(f"no such batch: {batch_id}")
        if batch.status != "pending":
            raise BatchNotPending(f"batch {batch_id} is {batch.status}, not pending")
        _validate_decisions_doc(decisions_doc)
        if decisions_doc.get("batch_id") != batch_id:
            raise DecisionsInvalid(
                f"document names batch {decisions_doc.get('batch_id')!r}, expected {batch_id}"
            )

        by_candidate: dict[str, dict] = {}
        known = {c.id for c in batch.candidates}
        for decision in decisions_doc["decisions"]:
            cid = decision["candidate_id"]
            if cid not in known:
                raise DecisionsInvalid(f"decision for unknown candidate {cid}")
            if cid in by_candidate:
                raise DecisionsInvalid(f"duplicate decision for candidate {cid}")
            by_candidate[cid] = decision
        for candidate in batch.candidates:
            if candidate.id not in by_candidate:
                raise MissingDecision(candidate.id)

        drafts: list[dict] = []
        outcomes: list[dict] = []
        for candidate in batch.candidates:
            decision = by_candidate[candidate.id]
            verdict = decision["verdict"]
            if verdict == "reject":
                outcomes.append({"candidate_id": candidate.id, "status": "rejected"})
                continue

            is_principle = bool(decision.get("principle_text"))
            target = decision.get("target_skill")
            if not is_principle:
                if not target:
                    raise DecisionsInvalid(
                        f"candidate {candidate.id}: approve/edit needs target_skill "
                        "(or principle_text)"
                    )
                if not SKILL_NAME_OK.match(target):
                    raise UnknownTargetSkill(
                        f"candidate {candidate.id}: {target!r} is not a valid skill name"
                    )

            body = decision["edited_text"] if verdict == "edit" else candidate.exemplar_text
            body, generalized = decontextualize(body, decision.get("generalization_notes"))

            signature = tuple(candidate.tag_signature)
            support = _corpus_support(state.corpus, signature, body, config.similarity_threshold)
            contradictions = _contradictions(state.corpus, tag_key(signature))
            if support < config.min_support:
                outcomes.append(
                    {
                        "candidate_id": candidate.id,
                        "status": "dropped",
                        "reason": f"insufficient corpus support ({support} < {config.min_support})",
                    }
                )
                continue
            if contradictions >= config.min_support:
                outcomes.append(
                    {
                        "candidate_id": candidate.id,
                        "status": "dropped",
                        "reason": f"contradicted by {contradictions} entries",
                    }
                )
                continue

            if is_principle:
                draft = {
                    "type": "principle",
                    "candidate_id": candidate.id,
                    "principle_text": decision["principle_text"],
                    "provenance": list(candidate.support_entries),
                    "corpus_support": support,
                }
            else:
                draft = structure_asset(candidate, body, state.corpus)
                draft.update(
                    {
                        "type": "section",
                        "candidate_id": candidate.id,
                        "target_skill": target,
                        "decontextualized": generalized,
                        "corpus_support": support,
                    }
                )
            drafts.append(draft)
            outcomes.append({"candidate_id": candidate.id, "status": "validated"})

        batch.status = "decided"
        batch.outcomes = outcomes
        batch.drafts = drafts
        state.decisions_docs[batch_id] = decisions_doc
        persist_state(state, root)
    return drafts


def _validate_decisions_doc(doc: dict) -> None:
    import jsonschema

    from . import schemas

    try:
        jsonschema.validate(doc, schemas.DECISIONS_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DecisionsInvalid(f"decisions document invalid: {exc.message}") from exc


@dataclass
class IntegrationReport:
    batch_id: str
    assets_written: int = 0
    entries_consolidated: int = 0
    principles_updated: int = 0
    eta: float | None = None

    def to_doc(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "assets_written": self.assets_written,
            "entries_consolidated": self.entries_consolidated,
            "principles_updated": self.principles_updated,
            "eta": self.eta,
        }


def _next_principle_id(principles: list[Principle]) -> str:
    top = 0
    for p in principles:
        m = re.match(r"^p-(\d+)$", p.id)
        if m:
            top = max(top, int(m.group(1)))
    return f"p-{top + 1:04d}"


def integrate(
    root: Path | str, batch_id: str, now: datetime | None = None
) -> IntegrationReport:
    """Write a decided batch's validated drafts into the knowledge state.

    Reference sections are appended (never rewritten) to the target
    skill with a version bump; support entries are consolidation-marked,
    never deleted; principle drafts land confirmed in the constitution.
    Efficiency is the structure delta per newly consolidated entry and
    is recorded in the batch's history document.
    """
    root = Path(root)
    now = now or datetime.now(timezone.utc)
    with workspace_lock(root):
        state = load_state(root)
        batch = state.batches.get(batch_id)
        if batch is None:
            raise UnknownBatch(f"no such batch: {batch_id}")
        if batch.status != "decided":
            raise BatchNotDecided(f"batch {batch_id} is {batch.status}, not decided")

        before_raw = structure_raw(state.skills, state.config.min_support)
        previously_consolidated = {
            e.id for e in state.corpus.entries if e.consolidated_into is not None
        }
        consumed: set[str] = set()
        report = IntegrationReport(batch_id=batch_id)
        assets: list[dict] = []

        for draft in batch.drafts:
            if draft["type"] == "principle":
                principles = state.constitutional.principles
                existing = next(
                    (p for p in principles if p.text == draft["principle_text"]), None
                )
                if existing is not None:
                    existing.status = "confirmed"
                    merged = list(existing.source_entries)
                    merged.extend(e for e in draft["provenance"] if e not in merged)
                    existing.source_entries = merged
                else:
                    principles.append(
                        Principle(
                            id=_next_principle_id(principles),
                            text=draft["principle_text"],
                            status="confirmed",
                            source_entries=list(draft["provenance"]),
                        )
                    )
                state.constitutional.set_principles(principles)
                report.principles_updated += 1
                continue

            skill = state.skill(draft["target_skill"])
            if skill is None:
                skill = SkillAsset(
                    name=draft["target_skill"],
                    instructions=SKILL_TEMPLATE.format(name=draft["target_skill"]),
                )
                state.skills.append(skill)
                state.skills.sort(key=lambda s: s.name)
            section = ReferenceSection(
                heading=draft["heading"],
                body=draft["body"],
                examples=list(draft["examples"]),
                provenance=list(draft["provenance"]),
                validated=True,
                decontextualized=bool(draft.get("decontextualized")),
                category=Category(draft["category"]),
                batch_id=batch_id,
            )
            rendered = render_reference_section(section)
            current = skill.references.get(draft["filename"], "")
            skill.references[draft["filename"]] = (
                current + "\n" + rendered if current else rendered
            )
            for eid in draft["provenance"]:
                if eid not in skill.provenance:
                    skill.provenance.append(eid)
            skill.provenance.sort()
            version = (skill.versions[-1].version + 1) if skill.versions else 1
            skill.versions.append(
                VersionRecord(
                    version=version,
                    batch_id=batch_id,
                    timestamp=now_iso(now),
                    change_summary=f"add {draft['heading']} to {draft['filename']}",
                    content_hash=skill.content_hash(),
                )
            )
            state.corpus.archived_groups.append(
                ConsolidationRecord(
                    batch_id=batch_id,
                    entry_ids=list(draft["provenance"]),
                    asset_name=skill.name,
                    asset_version=version,
                )
            )
            consumed.update(draft["provenance"])
            assets.append(
                {
                    "name": skill.name,
                    "version": version,
                    "content_hash": skill.versions[-1].content_hash,
                }
            )
            report.assets_written += 1

        state.corpus.apply_consolidation_marks()
        after_raw = structure_raw(state.skills, state.config.min_support)
        newly = consumed - previously_consolidated
        report.entries_consolidated = len(newly)
        delta = after_raw - before_raw
        report.eta = (delta / len(newly)) if newly else None

        state.history.append(
            {
                "batch_id": batch_id,
                "integrated_at": now_iso(now),
                "assets": assets,
                "entries_consolidated": report.entries_consolidated,
                "delta_structure": delta,
                "eta": report.eta,
            }
        )
        batch.status = "integrated"
        persist_state(state, root, authorized_batch=batch_id)
    return report


@dataclass
class TriggerFiring:
    mode: str  # scheduled | threshold | event
    detail: str

    def to_doc(self) -> dict:
        return {"mode": self.mode, "detail": self.detail}


SCHEDULE_PERIODS = {"daily": 1, "weekly": 7, "monthly": 30}


def check_triggers(state: KnowledgeState, now: datetime) -> list[TriggerFiring]:
    """Which crystallization triggers fire at `now`. Pure in (state, now).

    Scheduled: the configured period has elapsed since the last
    integrated batch (or since the earliest entry when none exists).
    Threshold: strictly more un-consolidated entries than the limit.
    Event: an EVENT-tagged entry dated after the last batch was opened.
    """
    if now.tzinfo is None:
        now = now.replace(tzinfo=timezone.utc)
    firings: list[TriggerFiring] = []

    period = SCHEDULE_PERIODS.get(state.config.schedule)
    if period is not None:
        baseline: datetime | None = None
        if state.history:
            baseline = max(parse_iso(doc["integrated_at"]) for doc in state.history)
        elif state.corpus.entries:
            first = min(e.date for e in state.corpus.entries)
            baseline = datetime(first.year, first.month, first.day, tzinfo=timezone.utc)
        if baseline is not None and now - baseline >= timedelta(days=period):
            firings.append(
                TriggerFiring(
                    mode="scheduled",
                    detail=f"{state.config.schedule} period elapsed since {now_iso(baseline)}",
                )
            )

    unconsolidated = len(state.corpus.unconsolidated())
    if unconsolidated > state.config.threshold_trigger:
        firings.append(
            TriggerFiring(
                mode="threshold",
                detail=(
                    f"{unconsolidated} un-consolidated entries exceed "
                    f"threshold {state.config.threshold_trigger}"
                ),
            )
        )

    last_opened: Date | None = None
    if state.batches:
        latest = max(state.batches.values(), key=lambda b: (b.created_at, b.batch_id))
        last_opened = parse_iso(latest.created_at).date()
    for entry in state.corpus.entries:
        if "EVENT" not in entry.tags:
            continue
        if last_opened is None or entry.date > last_opened:
            firings.append(
                TriggerFiring(mode="event", detail=f"entry {entry.id} tagged EVENT")
            )
            break
    return firings
