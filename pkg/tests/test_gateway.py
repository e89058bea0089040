from __future__ import annotations

import json
import shutil
from datetime import datetime, timezone

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from nfd import load_state, open_batch
from nfd.cli import main
from nfd.gateway import create_app
from nfd.model import Scope

from .conftest import FIXTURES
from .reference import tree_bytes

NOW = datetime(2025, 6, 1, 12, 0, tzinfo=timezone.utc)


@pytest.fixture
def ws_with_batch(tmp_path):
    root = tmp_path / "ws"
    shutil.copytree(FIXTURES / "mini_analyst", root)
    batch = open_batch(root, Scope(required_tags=["ERROR"]), now=NOW)
    return root, batch


def _client(root) -> TestClient:
    return TestClient(create_app(root))


def test_list_pending_batches(ws_with_batch):
    root, batch = ws_with_batch
    listed = _client(root).get("/api/batches", params={"status": "pending"}).json()
    assert [b["batch_id"] for b in listed] == [batch.batch_id]
    everything = _client(root).get("/api/batches").json()
    assert len(everything) == 1


def test_get_batch_and_404(ws_with_batch):
    root, batch = ws_with_batch
    client = _client(root)
    doc = client.get(f"/api/batches/{batch.batch_id}")
    assert doc.status_code == 200
    assert doc.json()["status"] == "pending"
    missing = client.get("/api/batches/CC-20990101-9")
    assert missing.status_code == 404
    body = missing.json()
    assert set(body) == {"status", "code", "message"}


def test_reject_all_decides_batch(ws_with_batch):
    root, batch = ws_with_batch
    doc = {
        "batch_id": batch.batch_id,
        "decisions": [{"candidate_id": c.id, "verdict": "reject"} for c in batch.candidates],
    }
    response = _client(root).post(f"/api/batches/{batch.batch_id}/decisions", json=doc)
    assert response.status_code == 200
    assert response.json()["status"] == "decided"
    assert response.json()["drafts_validated"] == 0
    again = _client(root).post(f"/api/batches/{batch.batch_id}/decisions", json=doc)
    assert again.status_code == 409


def test_malformed_decisions_422(ws_with_batch):
    root, batch = ws_with_batch
    response = _client(root).post(
        f"/api/batches/{batch.batch_id}/decisions", json={"nonsense": True}
    )
    assert response.status_code == 422
    assert response.json()["code"] in ("decisions_invalid", "missing_decision")


def test_decide_and_integrate_reports_value_delta(ws_with_batch):
    root, batch = ws_with_batch
    doc = {
        "batch_id": batch.batch_id,
        "decisions": [
            {"candidate_id": c.id, "verdict": "approve", "target_skill": "sector-analysis"}
            for c in batch.candidates
        ],
    }
    response = _client(root).post(
        f"/api/batches/{batch.batch_id}/decisions", params={"integrate": "true"}, json=doc
    )
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "integrated"
    integration = body["integration"]
    assert integration["assets_written"] >= 1
    assert integration["value_after"] >= integration["value_before"] - 1e-9
    assert integration["eta"] is not None


def test_metrics_endpoint(ws_with_batch):
    root, _ = ws_with_batch
    doc = _client(root).get("/api/metrics").json()
    assert {"breadth", "structure_norm", "align", "value", "eta_history"} <= set(doc)


def test_entries_search_and_ids(ws_with_batch):
    root, _ = ws_with_batch
    client = _client(root)
    hits = client.get("/api/entries", params={"q": "capex", "limit": 5}).json()
    assert hits and all("capex" in h["body"].lower() for h in hits)
    tagged = client.get("/api/entries", params={"tags": "ERROR,SECTOR-SPECIFIC", "limit": 50}).json()
    assert len(tagged) == 4
    by_ids = client.get("/api/entries", params={"ids": tagged[0]["id"]}).json()
    assert [e["id"] for e in by_ids] == [tagged[0]["id"]]


def test_skill_endpoint_and_404(ws_with_batch):
    root, _ = ws_with_batch
    client = _client(root)
    skill = client.get("/api/skills/earnings-analysis")
    assert skill.status_code == 200
    assert skill.json()["name"] == "earnings-analysis"
    assert client.get("/api/skills/nope").status_code == 404


def test_history_and_schema_endpoints(ws_with_batch):
    root, _ = ws_with_batch
    client = _client(root)
    assert client.get("/api/history").json() == []
    schema = client.get("/api/schemas/decisions").json()
    assert schema["required"] == ["batch_id", "decisions"]


def test_server_writes_stay_inside_workspace(ws_with_batch, tmp_path):
    root, batch = ws_with_batch
    outside_before = {p for p in tmp_path.iterdir()}
    doc = {
        "batch_id": batch.batch_id,
        "decisions": [{"candidate_id": c.id, "verdict": "reject"} for c in batch.candidates],
    }
    _client(root).post(f"/api/batches/{batch.batch_id}/decisions", json=doc)
    assert {p for p in tmp_path.iterdir()} == outside_before


def test_api_cli_equivalence_golden_diff(tmp_path):
    """The same decisions document via POST and via the CLI yields
    byte-identical workspaces."""
    roots = {}
    for name in ("api", "cli"):
        root = tmp_path / name
        shutil.copytree(FIXTURES / "mini_analyst", root)
        open_batch(root, Scope(required_tags=["ERROR"]), now=NOW)
        roots[name] = root

    batch_id = "CC-20250601-1"
    batch_doc = json.loads(
        (roots["api"] / "crystal" / "pending" / f"{batch_id}.json").read_text()
    )
    decisions = {
        "batch_id": batch_id,
        "decisions": [
            {"candidate_id": c["id"], "verdict": "approve", "target_skill": "sector-analysis"}
            for c in batch_doc["candidates"]
        ],
    }

    response = _client(roots["api"]).post(f"/api/batches/{batch_id}/decisions", json=decisions)
    assert response.status_code == 200

    decisions_file = tmp_path / "decisions.json"
    decisions_file.write_text(json.dumps(decisions), "utf-8")
    result = CliRunner().invoke(
        main,
        ["--workspace", str(roots["cli"]), "crystallize", "decide", batch_id,
         "--file", str(decisions_file)],
    )
    assert result.exit_code == 0, result.output

    assert tree_bytes(roots["api"]) == tree_bytes(roots["cli"])
