from __future__ import annotations

import math
from datetime import date as Date

import pytest

from nfd import load_state
from nfd.errors import ZeroConsumption
from nfd.metrics import (
    align,
    breadth,
    efficiency,
    progression_report,
    structure,
    structure_raw,
    value,
)
from nfd.model import (
    Category,
    ConstitutionalLayer,
    EngineConfig,
    ExperientialCorpus,
    ExperientialEntry,
    Principle,
    Scope,
    SkillAsset,
    entry_id,
    render_reference_section,
    ReferenceSection,
    splice_principles,
)

from .reference import scan_progression
from .util import run_cycle

DAY = Date(2025, 5, 1)


def _corpus(rows) -> ExperientialCorpus:
    return ExperientialCorpus(
        entries=[
            ExperientialEntry(id=entry_id(DAY, i + 1), tags=list(tags), category=cat, body=body)
            for i, (tags, cat, body) in enumerate(rows)
        ]
    )


# ------------------------------------------------------------------ breadth


def test_breadth_empty_corpus_is_zero():
    assert breadth(ExperientialCorpus(), EngineConfig()) == 0.0


def test_breadth_single_entry_hand_value():
    corpus = _corpus([(["INSIGHT"], Category.INSIGHT_FRAGMENT, "one")])
    expected = (1 / 6 + 1 / 500 + 0.0) / 3
    assert breadth(corpus, EngineConfig()) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.0562222222, abs=1e-9)


def test_breadth_saturates_at_one():
    tags = ["OPERATIONAL", "REASONING", "PATTERN", "ERROR"]
    categories = list(Category)
    rows = []
    for i in range(600):
        rows.append(([tags[i % 4]], categories[i % 6], f"body {i}"))
    corpus = _corpus(rows)
    assert breadth(corpus, EngineConfig()) == pytest.approx(1.0, abs=1e-12)


def test_breadth_entropy_zero_for_single_tag():
    corpus = _corpus([(["ERROR"], Category.ERROR_RECORD, f"b{i}") for i in range(10)])
    expected = (1 / 6 + 10 / 500 + 0.0) / 3
    assert breadth(corpus, EngineConfig()) == pytest.approx(expected, abs=1e-12)


def test_coverage_and_volume_monotone_under_append():
    rows = [(["ERROR"], Category.ERROR_RECORD, "a"), (["INSIGHT"], Category.INSIGHT_FRAGMENT, "b")]
    corpus = _corpus(rows)
    config = EngineConfig()
    cats = {e.category for e in corpus.entries}
    n = len(corpus.entries)
    corpus2 = _corpus(rows + [(["PATTERN"], Category.PATTERN_OBSERVATION, "c")])
    assert len({e.category for e in corpus2.entries}) >= len(cats)
    assert len(corpus2.entries) >= n
    assert min(1, len(corpus2.entries) / config.n_sat) >= min(1, n / config.n_sat)


def test_entropy_term_can_dip_under_append():
    """Documented counterexample: an append may reduce tag diversity.

    Pipeline-level value monotonicity across integrate is unaffected:
    integration adds no entries, so breadth is constant there.
    """
    balanced = _corpus(
        [(["A1"], Category.ERROR_RECORD, "x"), (["B1"], Category.ERROR_RECORD, "y")]
    )
    skewed = _corpus(
        [
            (["A1"], Category.ERROR_RECORD, "x"),
            (["B1"], Category.ERROR_RECORD, "y"),
            (["A1"], Category.ERROR_RECORD, "z"),
        ]
    )
    config = EngineConfig()
    assert breadth(skewed, config) < breadth(balanced, config)


# ---------------------------------------------------------------- structure


def _skill_with_sections(*specs) -> SkillAsset:
    texts = []
    for validated, examples, prov_n, conditions in specs:
        texts.append(
            render_reference_section(
                ReferenceSection(
                    heading="[ERROR][X]",
                    body="body",
                    examples=[f"e{i}" for i in range(examples)],
                    provenance=[f"2025-05-01#{i:04d}" for i in range(1, prov_n + 1)],
                    validated=validated,
                    decontextualized=False,
                    category=Category.ERROR_RECORD,
                    batch_id="CC-20250501-1",
                    conditions=["real condition"] if conditions else [],
                )
            )
        )
    return SkillAsset(name="s", references={"x.md": "\n".join(texts)})


def test_structure_no_skills_is_zero():
    assert structure_raw([], 3) == 0.0


def test_structure_fully_flagged_section_is_one():
    skill = _skill_with_sections((True, 2, 3, True))
    assert structure_raw([skill], 3) == pytest.approx(1.0)


def test_structure_hand_summed_fixture():
    specs = [
        (True, 2, 3, True),    # 1.0
        (True, 2, 3, False),   # 0.8
        (True, 0, 3, False),   # 0.6
        (False, 2, 3, False),  # 0.4
        (False, 0, 0, False),  # 0.0... provenance 0 -> 0.0 + has_examples 0
        (True, 1, 2, True),    # 0.4 + 0.2 + 0 + 0.2 = 0.8
        (False, 1, 3, True),   # 0.2 + 0.2 + 0.2 = 0.6
        (True, 3, 3, True),    # 1.0
    ]
    skill = _skill_with_sections(*specs)
    assert structure_raw([skill], 3) == pytest.approx(5.2)
    raw, norm = structure([skill], EngineConfig(s_sat=20))
    assert norm == pytest.approx(5.2 / 20)


def test_structure_norm_clamps():
    skill = _skill_with_sections(*[(True, 2, 3, True)] * 25)
    _, norm = structure([skill], EngineConfig(s_sat=20))
    assert norm == 1.0


# -------------------------------------------------------------------- align


def _constitutional(principles: list[Principle]) -> ConstitutionalLayer:
    text = splice_principles("# Memory\n\n## Principles\n", principles)
    return ConstitutionalLayer(documents={"MEMORY.md": text})


def test_align_no_principles_is_zero():
    assert align(ConstitutionalLayer(documents={"MEMORY.md": "# Memory\n"})) == 0.0


def test_align_all_confirmed_is_one():
    principles = [
        Principle(id=f"p-{i:04d}", text=f"t{i}", status="confirmed", user_origin=True)
        for i in range(4)
    ]
    assert align(_constitutional(principles)) == 1.0


def test_align_mixed_hand_value():
    principles = [
        Principle(id="p-0001", text="a", status="confirmed", user_origin=True),
        Principle(id="p-0002", text="b", status="confirmed", user_origin=True),
        Principle(id="p-0003", text="c", status="contradicted"),
        Principle(id="p-0004", text="d", status="proposed"),
    ]
    assert align(_constitutional(principles)) == pytest.approx((2 - 1) / 4)


def test_align_clamped_at_zero():
    principles = [
        Principle(id="p-0001", text="a", status="contradicted"),
        Principle(id="p-0002", text="b", status="contradicted"),
    ]
    assert align(_constitutional(principles)) == 0.0


# -------------------------------------------------------------------- value


def test_value_fresh_scaffold_is_zero(fresh_ws):
    assert value(load_state(fresh_ws)).value == 0.0


def test_value_composition_arithmetic():
    # equal weights over components (0.6, 0.5, 1.0) must give 0.7
    assert (0.6 + 0.5 + 1.0) / 3 == pytest.approx(0.7)


def test_value_breakdown_identity(case_study):
    state = load_state(case_study)
    breakdown = value(state)
    composed = (
        breakdown.weights[0] * breakdown.breadth
        + breakdown.weights[1] * breakdown.structure_norm
        + breakdown.weights[2] * breakdown.align
    )
    assert breakdown.value == pytest.approx(composed, abs=1e-9)
    assert 0.0 <= breakdown.value <= 1.0


def test_value_in_unit_interval_on_fixtures(mini_analyst, case_study):
    for root in (mini_analyst, case_study):
        breakdown = value(load_state(root))
        assert 0.0 <= breakdown.value <= 1.0
        assert 0.0 <= breakdown.breadth <= 1.0
        assert 0.0 <= breakdown.structure_norm <= 1.0
        assert 0.0 <= breakdown.align <= 1.0


def test_value_monotone_across_integrate(mini_analyst):
    before = value(load_state(mini_analyst))
    run_cycle(mini_analyst, Scope(required_tags=["ERROR"]), "sector-analysis")
    after = value(load_state(mini_analyst))
    assert after.value >= before.value - 1e-9


# --------------------------------------------------------------- efficiency


def test_efficiency_direct_ratio():
    assert efficiency({"delta_structure": 2.0, "entries_consolidated": 10}) == pytest.approx(0.2)
    assert efficiency({"delta_structure": 1.0, "entries_consolidated": 10}) == pytest.approx(0.1)


def test_efficiency_zero_consumption():
    with pytest.raises(ZeroConsumption):
        efficiency({"delta_structure": 1.0, "entries_consolidated": 0})


def test_efficiency_matches_history_file(mini_analyst):
    _, report = run_cycle(mini_analyst, Scope(required_tags=["ERROR"]), "sector-analysis")
    doc = load_state(mini_analyst).history[-1]
    assert efficiency(doc) == pytest.approx(report.eta, abs=1e-12)


# -------------------------------------------------------------- progression


def test_progression_on_case_study_matches_pinned_counts(case_study):
    report = progression_report(load_state(case_study), Date(2025, 2, 3), Date(2025, 2, 23))
    assert report.skill_refs_populated == 8
    assert report.error_patterns == 12
    assert report.daily_log_entries == 21


def test_progression_matches_file_scan_oracle(case_study):
    state = load_state(case_study)
    for window in [(Date(2025, 2, 3), Date(2025, 2, 23)), (None, None), (Date(2025, 1, 1), Date(2025, 1, 31))]:
        mine = progression_report(state, *window).to_doc()
        ref = scan_progression(case_study, *window)
        for key, expected in ref.items():
            assert mine[key] == expected, key


def test_progression_empty_window(case_study):
    report = progression_report(load_state(case_study), Date(2030, 1, 1), Date(2030, 1, 2))
    assert report.daily_log_entries == 0
    assert report.case_recalls == 0
    assert report.bias_flags == 0


def test_progression_ratings(case_study):
    report = progression_report(
        load_state(case_study), ratings={"useful": 37, "total": 50}
    )
    assert report.useful_analyses_pct == pytest.approx(74.0)
    assert progression_report(load_state(case_study)).useful_analyses_pct is None
