"""Local HTTP API for the review board.

Read endpoints serve the on-disk documents as-is; the single mutating
endpoint accepts a decisions document (same schema as the CLI and the
hand-written file path) and runs the decide step, optionally followed
by integration. Every mutation goes through the workspace lock, so a
CLI invocation and a running server coexist safely.

Loopback-only by default; no auth: the deployment unit is one
practitioner's workspace.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .crystallize import apply_decisions, check_triggers, integrate
from .errors import (
    BatchNotDecided,
    BatchNotPending,
    DecisionsInvalid,
    LockHeld,
    MissingDecision,
    NfdError,
    NotAWorkspace,
    UnknownBatch,
    UnknownTargetSkill,
)
from .index import SearchQuery, search, shard_for_state
from .metrics import value
from .model import KnowledgeState
from .schemas import DECISIONS_SCHEMA
from .workspace import load_state

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (UnknownBatch, 404),
    (NotAWorkspace, 404),
    (BatchNotPending, 409),
    (BatchNotDecided, 409),
    (DecisionsInvalid, 422),
    (MissingDecision, 422),
    (UnknownTargetSkill, 422),
    (LockHeld, 423),
]


def _http_status(exc: NfdError) -> int:
    for err_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, err_type):
            return status
    return 400


def _api_error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"status": status, "code": code, "message": message},
    )


def create_app(root: Path | str, ui_dir: Path | str | None = None) -> FastAPI:
    root = Path(root)
    app = FastAPI(title="nfd review gateway", version="0.1.0")

    @app.exception_handler(NfdError)
    async def engine_error(_request: Request, exc: NfdError):
        return _api_error(_http_status(exc), exc.code, str(exc))

    def state() -> KnowledgeState:
        return load_state(root)

    @app.get("/api/batches")
    def list_batches(status: str | None = None):
        batches = sorted(state().batches.values(), key=lambda b: b.batch_id)
        if status:
            batches = [b for b in batches if b.status == status]
        return [b.to_doc() for b in batches]

    @app.get("/api/batches/{batch_id}")
    def get_batch(batch_id: str):
        batch = state().batches.get(batch_id)
        if batch is None:
            raise UnknownBatch(f"no such batch: {batch_id}")
        return batch.to_doc()

    @app.post("/api/batches/{batch_id}/decisions")
    async def post_decisions(
        batch_id: str, request: Request, integrate_flag: bool = Query(False, alias="integrate")
    ):
        try:
            doc = await request.json()
        except Exception:
            raise DecisionsInvalid("request body is not valid JSON") from None
        if not isinstance(doc, dict):
            raise DecisionsInvalid("decisions document must be a JSON object")
        value_before = value(state()).value
        drafts = apply_decisions(root, batch_id, doc)
        decided = state()
        result = {
            "batch_id": batch_id,
            "status": decided.batches[batch_id].status,
            "outcomes": decided.batches[batch_id].outcomes,
            "drafts_validated": len(drafts),
        }
        if integrate_flag:
            report = integrate(root, batch_id)
            after = value(state()).value
            result["status"] = "integrated"
            result["integration"] = report.to_doc()
            result["integration"]["value_before"] = value_before
            result["integration"]["value_after"] = after
        return result

    @app.get("/api/metrics")
    def get_metrics():
        current = state()
        doc = value(current).to_doc()
        doc["eta_history"] = [
            {
                "batch_id": h["batch_id"],
                "integrated_at": h["integrated_at"],
                "eta": h.get("eta"),
            }
            for h in current.history
        ]
        return doc

    @app.get("/api/entries")
    def get_entries(
        q: str = "",
        tags: str = "",
        limit: int = 10,
        ids: str = "",
    ):
        current = state()
        if ids:
            wanted = [i for i in ids.split(",") if i]
            by_id = current.corpus.by_id()
            return [_entry_doc(by_id[i]) for i in wanted if i in by_id]
        shard = shard_for_state(current, persist=False)
        hits = search(
            shard,
            current.corpus.entries,
            SearchQuery(
                text=q,
                required_tags={t for t in tags.split(",") if t},
                limit=limit,
            ),
            decay_lambda=current.config.decay_lambda,
        )
        by_id = current.corpus.by_id()
        out = []
        for hit in hits:
            doc = _entry_doc(by_id[hit.entry_id])
            doc["final_score"] = hit.final_score
            doc["snippet"] = hit.snippet
            out.append(doc)
        return out

    @app.get("/api/skills/{name}")
    def get_skill(name: str):
        skill = state().skill(name)
        if skill is None:
            return _api_error(404, "unknown_skill", f"no such skill: {name}")
        return {
            "name": skill.name,
            "instructions": skill.instructions,
            "references": dict(skill.references),
            "versions": [v.to_doc() for v in skill.versions],
            "provenance": list(skill.provenance),
            "flags": skill.flags,
        }

    @app.get("/api/history")
    def get_history():
        return state().history

    @app.get("/api/triggers")
    def get_triggers(now: str | None = None):
        from datetime import datetime, timezone

        if now:
            stamp = datetime.fromisoformat(now.replace("Z", "+00:00"))
            if stamp.tzinfo is None:
                stamp = stamp.replace(tzinfo=timezone.utc)
        else:
            stamp = datetime.now(timezone.utc)
        return [f.to_doc() for f in check_triggers(state(), stamp)]

    @app.get("/api/schemas/decisions")
    def get_decisions_schema():
        return DECISIONS_SCHEMA

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=Path(ui_dir), html=True), name="ui")

    return app


def _entry_doc(entry) -> dict:
    return {
        "id": entry.id,
        "date": entry.date.isoformat(),
        "timestamp": entry.timestamp,
        "tags": list(entry.tags),
        "category": entry.category.value,
        "body": entry.body,
        "context": entry.context,
        "consolidated_into": (
            {"asset": entry.consolidated_into[0], "version": entry.consolidated_into[1]}
            if entry.consolidated_into
            else None
        ),
    }
