"""Quantitative measures over a knowledge state.

The composite value of a state is a weighted sum of three bounded
terms: experiential breadth, skill-layer structure, and constitutional
alignment. Crystallization efficiency is the structure gain per
consolidated entry, on the raw (unbounded) structure scale.

All computations are pure reads over a state snapshot and are
recomputable from the workspace files alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date

from .errors import ZeroConsumption
from .model import (
    Category,
    ConstitutionalLayer,
    EngineConfig,
    ExperientialCorpus,
    KnowledgeState,
    SkillAsset,
    parse_reference_sections,
)

N_CATEGORIES = 6


@dataclass
class ValueBreakdown:
    breadth: float
    structure_raw: float
    structure_norm: float
    align: float
    value: float
    weights: tuple[float, float, float]

    def to_doc(self) -> dict:
        return {
            "breadth": self.breadth,
            "structure_raw": self.structure_raw,
            "structure_norm": self.structure_norm,
            "align": self.align,
            "value": self.value,
            "weights": {"alpha": self.weights[0], "beta": self.weights[1], "gamma": self.weights[2]},
        }


@dataclass
class ProgressionReport:
    window_from: Date | None
    window_to: Date | None
    useful_analyses_pct: float | None
    case_recalls: int
    bias_flags: int
    skill_refs_populated: int
    error_patterns: int
    daily_log_entries: int

    def to_doc(self) -> dict:
        return {
            "window": {
                "from": self.window_from.isoformat() if self.window_from else None,
                "to": self.window_to.isoformat() if self.window_to else None,
            },
            "useful_analyses_pct": self.useful_analyses_pct,
            "case_recalls": self.case_recalls,
            "bias_flags": self.bias_flags,
            "skill_refs_populated": self.skill_refs_populated,
            "error_patterns": self.error_patterns,
            "daily_log_entries": self.daily_log_entries,
        }


def breadth(corpus: ExperientialCorpus, config: EngineConfig) -> float:
    """Coverage and diversity of the experiential layer, in [0,1].

    Mean of three terms: category coverage (#present / 6), volume
    saturation min(1, |E|/n_sat), and the Shannon entropy of the tag
    distribution normalized by log(#distinct tags). Consolidated entries
    count: consolidation marks, it does not remove.
    """
    entries = corpus.entries
    if not entries:
        return 0.0
    categories = {e.category for e in entries}
    c_cov = len(categories) / N_CATEGORIES
    v_sat = min(1.0, len(entries) / config.n_sat)

    counts: dict[str, int] = {}
    for entry in entries:
        for tag in entry.tags:
            counts[tag] = counts.get(tag, 0) + 1
    d_norm = 0.0
    if len(counts) > 1:
        total = sum(counts.values())
        entropy = -sum((c / total) * math.log(c / total) for c in counts.values())
        d_norm = entropy / math.log(len(counts))
    return (c_cov + v_sat + d_norm) / 3.0


def structure_raw(skills: list[SkillAsset], min_support: int) -> float:
    """Sum of per-section quality scores across all reference files.

    q(s) = 0.4*validated + 0.2*has_examples + 0.2*(|provenance| >= min_support)
         + 0.2*has_conditions
    """
    total = 0.0
    for skill in skills:
        for section in skill.sections():
            total += (
                0.4 * section.validated
                + 0.2 * section.has_examples
                + 0.2 * (len(section.provenance) >= min_support)
                + 0.2 * section.has_conditions
            )
    return total


def structure(skills: list[SkillAsset], config: EngineConfig) -> tuple[float, float]:
    """(raw, normalized) structure. Raw feeds efficiency; normalized feeds value."""
    raw = structure_raw(skills, config.min_support)
    return raw, min(1.0, raw / config.s_sat)


def align(constitutional: ConstitutionalLayer) -> float:
    """How far the confirmed principles outweigh the contradicted ones."""
    principles = constitutional.principles
    if not principles:
        return 0.0
    confirmed = sum(1 for p in principles if p.status == "confirmed")
    contradicted = sum(1 for p in principles if p.status == "contradicted")
    return max(0.0, min(1.0, (confirmed - contradicted) / len(principles)))


def value(state: KnowledgeState) -> ValueBreakdown:
    """Weighted composite of breadth, structure and alignment."""
    cfg = state.config
    b = breadth(state.corpus, cfg)
    raw, norm = structure(state.skills, cfg)
    a = align(state.constitutional)
    return ValueBreakdown(
        breadth=b,
        structure_raw=raw,
        structure_norm=norm,
        align=a,
        value=cfg.alpha * b + cfg.beta * norm + cfg.gamma * a,
        weights=(cfg.alpha, cfg.beta, cfg.gamma),
    )


def efficiency(history_record: dict) -> float:
    """Structure gained per consolidated entry for one integrated batch."""
    consumed = int(history_record.get("entries_consolidated", 0))
    if consumed == 0:
        raise ZeroConsumption("no entries were consolidated by this batch")
    return float(history_record["delta_structure"]) / consumed


def _in_window(day: Date, window_from: Date | None, window_to: Date | None) -> bool:
    if window_from and day < window_from:
        return False
    if window_to and day > window_to:
        return False
    return True


def progression_report(
    state: KnowledgeState,
    window_from: Date | None = None,
    window_to: Date | None = None,
    ratings: dict | None = None,
) -> ProgressionReport:
    """Development progression counts over a date window.

    Everything except the usefulness percentage is recomputable from the
    workspace alone; ratings, when given, are {"useful": n, "total": m}.
    """
    in_window = [
        e for e in state.corpus.entries if _in_window(e.date, window_from, window_to)
    ]
    populated = 0
    error_sections = 0
    for skill in state.skills:
        for filename in sorted(skill.references):
            sections = parse_reference_sections(skill.references[filename])
            if sections:
                populated += 1
            error_sections += sum(
                1 for s in sections if s.validated and s.category == Category.ERROR_RECORD
            )
    pct = None
    if ratings and ratings.get("total"):
        pct = 100.0 * ratings.get("useful", 0) / ratings["total"]
    return ProgressionReport(
        window_from=window_from,
        window_to=window_to,
        useful_analyses_pct=pct,
        case_recalls=sum(1 for e in in_window if "RECALL" in e.tags),
        bias_flags=sum(1 for e in in_window if "BIAS-FLAG" in e.tags),
        skill_refs_populated=populated,
        error_patterns=error_sections,
        daily_log_entries=len(in_window),
    )
