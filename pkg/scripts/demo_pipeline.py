#!/usr/bin/env python3
"""Walk the whole loop once in a scratch workspace.

Scaffolds a workspace, migrates a few historical notes, logs a week of
entries, runs one crystallization cycle over the error records, and
prints the value breakdown before and after.

Usage: python3 scripts/demo_pipeline.py [workdir]
"""

from __future__ import annotations

import sys
import tempfile
from datetime import date, timedelta
from pathlib import Path

from nfd import (
    append_entry,
    apply_decisions,
    integrate,
    load_state,
    open_batch,
    scaffold_workspace,
    migrate_corpus,
)
from nfd.metrics import value
from nfd.model import Scope


def main() -> None:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
    root = workdir / "workspace"
    notes = workdir / "old-notes"
    notes.mkdir(parents=True, exist_ok=True)

    for i in range(3):
        (notes / f"2024-11-{10 + i:02d}-note.md").write_text(
            "Decided to review the capex assumptions before sizing.\n\n"
            f"My reasoning was that the cycle stage matters most, note {i}.\n",
            "utf-8",
        )

    scaffold_workspace(root, persona="careful, evidence-first research partner")
    report = migrate_corpus(root, notes)
    print(f"migrated: {report.entries_added} entries from {report.files_processed} files")

    day = date(2024, 12, 2)
    mistakes = [
        "applied revenue growth weighting to a capex heavy name and overrated it",
        "revenue growth weighting misled again on a capex heavy name",
        "capex heavy name hurt by revenue growth weighting, use cash flow yield",
    ]
    for offset, body in enumerate(mistakes):
        append_entry(root, day + timedelta(days=offset), ["ERROR", "SECTOR-SPECIFIC"], body)
    append_entry(root, day, ["INSIGHT", "STRATEGY"],
                 "I've realized the cycle stage drives the weighting choice")

    before = value(load_state(root))
    print(f"value before: {before.value:.4f} "
          f"(breadth {before.breadth:.3f}, structure {before.structure_norm:.3f}, align {before.align:.3f})")

    batch = open_batch(root, Scope(required_tags=["ERROR"]))
    print(f"opened {batch.batch_id} with {len(batch.candidates)} candidate(s)")
    decisions = {
        "batch_id": batch.batch_id,
        "decisions": [
            {"candidate_id": c.id, "verdict": "approve", "target_skill": "sector-analysis"}
            for c in batch.candidates
        ],
    }
    apply_decisions(root, batch.batch_id, decisions)
    outcome = integrate(root, batch.batch_id)
    eta = "n/a" if outcome.eta is None else f"{outcome.eta:.4f}"
    print(f"integrated: {outcome.assets_written} asset(s), "
          f"{outcome.entries_consolidated} entries consolidated, eta {eta}")

    after = value(load_state(root))
    print(f"value after:  {after.value:.4f} "
          f"(breadth {after.breadth:.3f}, structure {after.structure_norm:.3f}, align {after.align:.3f})")
    print(f"workspace left at {root}")


if __name__ == "__main__":
    main()
