"""Shared helpers for pipeline tests: fast corpus seeding and runs."""

from __future__ import annotations

from datetime import date as Date
from datetime import datetime, timezone
from pathlib import Path

from nfd import apply_decisions, integrate, load_state, open_batch, scaffold_workspace
from nfd.model import Scope


def write_log(root: Path, day: Date, rows: list[tuple]) -> None:
    """Append canonical entry lines without going through the engine."""
    lines = []
    for time, tags, body in rows:
        head = "- " + (f"{time} " if time else "") + "".join(f"[{t}]" for t in tags) + " "
        parts = body.split("\n")
        lines.append(head + parts[0])
        lines.extend("  " + p for p in parts[1:])
    path = root / "memory" / f"{day.isoformat()}.md"
    existing = path.read_text("utf-8") if path.exists() else ""
    path.write_text(existing + "\n".join(lines) + "\n", "utf-8")


def seeded_ws(tmp_path: Path, days: dict[Date, list[tuple]]) -> Path:
    root = tmp_path / "ws"
    scaffold_workspace(root)
    for day, rows in days.items():
        write_log(root, day, rows)
    return root


def approve_all(root: Path, batch, target_skill: str = "general") -> dict:
    return {
        "batch_id": batch.batch_id,
        "decisions": [
            {"candidate_id": c.id, "verdict": "approve", "target_skill": target_skill}
            for c in batch.candidates
        ],
    }


def run_cycle(
    root: Path,
    scope: Scope,
    target_skill: str = "general",
    now: datetime | None = None,
    config_overrides: dict | None = None,
):
    """open -> approve everything -> integrate; returns (batch, report)."""
    now = now or datetime(2025, 6, 1, 12, 0, tzinfo=timezone.utc)
    batch = open_batch(root, scope, now=now, config_overrides=config_overrides)
    if batch.status == "decided":  # nothing to review
        return batch, None
    apply_decisions(root, batch.batch_id, approve_all(root, batch, target_skill),
                    config_overrides=config_overrides)
    report = integrate(root, batch.batch_id, now=now)
    return load_state(root).batches[batch.batch_id], report
