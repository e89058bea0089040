from __future__ import annotations

import os
from datetime import date as Date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfd import load_state, persist_state, render_constitutional, scaffold_workspace
from nfd.errors import (
    InvariantViolation,
    LockHeld,
    NotAWorkspace,
    ParseError,
    TargetNotEmpty,
)
from nfd.ingest import append_entry
from nfd.model import VersionRecord
from nfd.workspace import workspace_lock

from .conftest import checked
from .reference import tree_bytes

PERSONA = "rigorous, evidence-based research partner"


def test_scaffold_with_persona_lands_in_soul(tmp_path):
    state = scaffold_workspace(tmp_path / "ws", persona=PERSONA)
    assert PERSONA in state.constitutional.documents["SOUL.md"]


def test_scaffold_then_load_is_empty_state(tmp_path):
    root = tmp_path / "ws"
    scaffold_workspace(root)
    state = checked(root)
    assert len(state.constitutional.documents) == 4
    assert state.skills == []
    assert state.corpus.entries == []
    assert (root / "crystal" / "pending").is_dir()
    assert (root / "nfd.json").is_file()


def test_scaffold_twice_fails(tmp_path):
    root = tmp_path / "ws"
    scaffold_workspace(root)
    with pytest.raises(TargetNotEmpty):
        scaffold_workspace(root)


def test_scaffold_tolerates_hidden_files(tmp_path):
    root = tmp_path / "ws"
    root.mkdir()
    (root / ".keep").write_text("")
    scaffold_workspace(root)


def test_load_missing_config_is_not_a_workspace(tmp_path):
    (tmp_path / "SOUL.md").write_text("# Soul\n")
    with pytest.raises(NotAWorkspace):
        load_state(tmp_path)


def test_load_golden_fixture_counts(mini_analyst):
    state = checked(mini_analyst)
    assert len(state.constitutional.documents) == 4
    assert len(state.skills) == 3
    assert len(state.corpus.entries) == 42
    assert sum(1 for e in state.corpus.entries if "ERROR" in e.tags) == 8
    assert state.warnings == []


def test_round_trip_fixpoint_on_fixtures(mini_analyst, case_study):
    for root in (mini_analyst, case_study):
        before = tree_bytes(root)
        written = persist_state(load_state(root), root)
        assert written == []
        assert tree_bytes(root) == before


def test_load_is_total_over_arbitrary_log_bytes(fresh_ws):
    victim = fresh_ws / "memory" / "2025-03-01.md"
    victim.write_bytes(b"\xff\xfe garbage \x00\x01\n- not an entry\n- [OK] fine\n")
    state = load_state(fresh_ws)
    assert any(w for w in state.warnings)
    assert [e.body for e in state.corpus.entries] == ["fine"]


@given(st.binary(max_size=300))
@settings(max_examples=60)
def test_load_never_raises_on_fuzzed_log(tmp_path_factory, data):
    root = tmp_path_factory.mktemp("fuzz") / "ws"
    scaffold_workspace(root)
    (root / "memory" / "2025-03-02.md").write_bytes(data)
    load_state(root)  # warnings allowed, exceptions are not


def test_bad_json_config_is_parse_error(fresh_ws):
    (fresh_ws / "nfd.json").write_text("{nope", "utf-8")
    with pytest.raises(ParseError):
        load_state(fresh_ws)


def test_persist_duplicate_skill_names_rejected(mini_analyst):
    state = load_state(mini_analyst)
    state.skills.append(state.skills[0])
    with pytest.raises(InvariantViolation):
        persist_state(state, mini_analyst)


def test_persist_after_append_changes_only_log_and_index(fresh_ws):
    day = Date(2025, 3, 3)
    append_entry(fresh_ws, day, ["INSIGHT"], "first")
    before = tree_bytes(fresh_ws)
    append_entry(fresh_ws, day, ["INSIGHT"], "second")
    after = tree_bytes(fresh_ws)
    changed = {k for k in set(before) | set(after) if before.get(k) != after.get(k)}
    assert changed == {"memory/2025-03-03.md", "memory/index/index.json"}
    # a full persist afterwards is a no-op: state already canonical
    assert persist_state(load_state(fresh_ws), fresh_ws) == []


def test_render_constitutional_skeleton_under_300_tokens(fresh_ws):
    render = render_constitutional(load_state(fresh_ws))
    assert render.token_count < 300
    assert not render.over_budget


def test_render_over_budget_flagged_not_truncated(fresh_ws):
    state = load_state(fresh_ws)
    state.constitutional.documents["USER.md"] += " ".join(["word"] * 2500) + "\n"
    render = render_constitutional(state)
    assert render.over_budget
    assert "word" in render.text  # nothing truncated


def test_render_includes_empty_doc_header_slot(fresh_ws):
    state = load_state(fresh_ws)
    state.constitutional.documents["MEMORY.md"] = ""
    render = render_constitutional(state)
    assert "=== MEMORY.md ===" in render.text


def test_render_order_fixed():
    order = ["SOUL.md", "AGENTS.md", "USER.md", "MEMORY.md"]
    import nfd.workspace as ws

    assert list(ws.CONSTITUTIONAL_DOCS) == order


@given(st.text(min_size=1, max_size=80))
@settings(max_examples=60)
def test_budget_monotone_under_appends(tmp_path_factory, extra):
    root = tmp_path_factory.mktemp("budget") / "ws"
    state = scaffold_workspace(root)
    before = render_constitutional(state).token_count
    state.constitutional.documents["AGENTS.md"] += extra
    assert render_constitutional(state).token_count >= before


def test_lock_is_exclusive_and_released(fresh_ws):
    with workspace_lock(fresh_ws):
        with pytest.raises(LockHeld):
            with workspace_lock(fresh_ws):
                pass
    with workspace_lock(fresh_ws):
        pass


def test_append_fails_fast_when_lock_held(fresh_ws):
    with workspace_lock(fresh_ws):
        with pytest.raises(LockHeld):
            append_entry(fresh_ws, Date(2025, 3, 4), ["INSIGHT"], "blocked")


def test_human_gate_blocks_unreviewed_skill_writes(mini_analyst):
    state = load_state(mini_analyst)
    state.skills[0].instructions += "\nsneaky edit\n"
    with pytest.raises(InvariantViolation, match="human gate"):
        persist_state(state, mini_analyst)


def test_human_gate_blocks_unreviewed_constitution_writes(mini_analyst):
    state = load_state(mini_analyst)
    state.constitutional.documents["SOUL.md"] += "\nnew persona line\n"
    with pytest.raises(InvariantViolation, match="human gate"):
        persist_state(state, mini_analyst)


def test_gate_allows_pure_canonicalization(mini_analyst):
    # strip the trailing newline by hand; persist may restore it silently
    path = mini_analyst / "skills" / "market-data" / "SKILL.md"
    path.write_bytes(path.read_bytes().rstrip(b"\n"))
    persist_state(load_state(mini_analyst), mini_analyst)
    assert path.read_bytes().endswith(b"\n")


def test_version_hash_mismatch_caught(mini_analyst):
    state = load_state(mini_analyst)
    state.skills[0].versions = [
        VersionRecord(1, "CC-20250101-1", "2025-01-01T00:00:00Z", "x", "deadbeef")
    ]
    with pytest.raises(InvariantViolation, match="hash"):
        persist_state(state, mini_analyst)


def test_failed_write_set_rolls_back(fresh_ws, monkeypatch):
    from nfd.workspace import WriteSet

    before = tree_bytes(fresh_ws)
    ws = WriteSet(fresh_ws)
    ws.put("SOUL.md", "changed\n")
    ws.put("nfd.json", "{}\n")

    real_replace = os.replace
    calls = {"n": 0}

    def flaky(src, dst):
        calls["n"] += 1
        if calls["n"] > 1:
            raise OSError("disk full")
        return real_replace(src, dst)

    monkeypatch.setattr(os, "replace", flaky)
    with pytest.raises(Exception):
        ws.apply()
    monkeypatch.undo()
    assert tree_bytes(fresh_ws) == before
