from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from nfd import load_state, scaffold_workspace, validate_state

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fresh_ws(tmp_path: Path) -> Path:
    root = tmp_path / "ws"
    scaffold_workspace(root)
    return root


@pytest.fixture
def mini_analyst(tmp_path: Path) -> Path:
    root = tmp_path / "mini_analyst"
    shutil.copytree(FIXTURES / "mini_analyst", root)
    return root


@pytest.fixture
def case_study(tmp_path: Path) -> Path:
    root = tmp_path / "case_study"
    shutil.copytree(FIXTURES / "case_study", root)
    return root


def checked(root: Path):
    """Load a workspace and assert the cross-cutting state invariants."""
    state = load_state(root)
    validate_state(state)
    return state
