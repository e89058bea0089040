"""Batch command surface over the engine.

One command per engine operation; mutating commands take the workspace
lock and apply their writes atomically, so a failed command leaves the
tree untouched. `--json` switches every command to machine output.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import json
from datetime import date as Date
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .crystallize import apply_decisions, check_triggers, integrate, open_batch
from .errors import NfdError, UnknownBatch
from .index import SearchQuery, search, shard_for_state
from .ingest import append_entry, ingest_transcript, migrate_corpus, parse_transcript
from .metrics import progression_report, value
from .model import PatternCandidate, ReviewBatch, Scope
from .workspace import load_state, scaffold_workspace


class EngineGroup(click.Group):
    """Maps engine errors to exit code 1, keeping tracebacks for bugs only."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except NfdError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(1)


def _parse_overrides(pairs: tuple[str, ...]) -> dict:
    overrides = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise click.UsageError(f"--config expects KEY=VALUE, got {pair!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def _emit(ctx: click.Context, doc, human: str | None = None) -> None:
    if ctx.obj["json"]:
        click.echo(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False))
    elif human is not None:
        click.echo(human)


def _state(ctx: click.Context):
    state = load_state(ctx.obj["workspace"])
    state.config = state.config.with_overrides(ctx.obj["overrides"])
    for warning in state.warnings:
        click.echo(f"warning: {warning}", err=True)
    return state


@click.group(cls=EngineGroup)
@click.version_option(version=__version__, prog_name="nfd")
@click.option(
    "--workspace",
    envvar="NFD_WORKSPACE",
    default=".",
    type=click.Path(path_type=Path),
    help="Workspace root (or set NFD_WORKSPACE).",
)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option(
    "--config",
    "config_overrides",
    multiple=True,
    metavar="KEY=VALUE",
    help="Override a config value for this invocation.",
)
@click.pass_context
def main(ctx, workspace: Path, as_json: bool, config_overrides: tuple[str, ...]):
    """Workspace-first knowledge engine."""
    ctx.obj = {
        "workspace": workspace,
        "json": as_json,
        "overrides": _parse_overrides(config_overrides),
    }


@main.command()
@click.option("--persona", default=None, help="Seed text for SOUL.md.")
@click.pass_context
def init(ctx, persona: str | None):
    """Scaffold a new workspace (must be empty or nonexistent)."""
    state = scaffold_workspace(ctx.obj["workspace"], persona=persona)
    _emit(
        ctx,
        {"root": str(state.root), "documents": len(state.constitutional.documents)},
        f"initialized workspace at {state.root}",
    )


@main.command()
@click.argument("body", nargs=-1, required=True)
@click.option("--tag", "-t", "tags", multiple=True, required=True, help="Uppercase tag token.")
@click.option("--date", "day", default=None, help="Entry date (default: today).")
@click.option("--time", "hhmm", default=None, help="Entry time HH:MM.")
@click.pass_context
def log(ctx, body: tuple[str, ...], tags: tuple[str, ...], day: str | None, hhmm: str | None):
    """Append one tagged entry to the daily log."""
    date = Date.fromisoformat(day) if day else Date.today()
    entry_id = append_entry(
        ctx.obj["workspace"], date, list(tags), " ".join(body), timestamp=hhmm
    )
    _emit(ctx, {"entry_id": entry_id}, entry_id)


@main.command()
@click.argument("transcript", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def ingest(ctx, transcript: Path):
    """Extract experiential records from a JSONL transcript and log them."""
    parsed = parse_transcript(transcript.read_text("utf-8"), filename=str(transcript))
    ids = ingest_transcript(ctx.obj["workspace"], parsed)
    _emit(
        ctx,
        {"entries_added": len(ids), "entry_ids": ids},
        f"added {len(ids)} entries" + (": " + ", ".join(ids) if ids else ""),
    )


@main.command()
@click.argument("source", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.pass_context
def migrate(ctx, source: Path):
    """Bulk-convert historical .md/.txt documents into log entries."""
    report = migrate_corpus(ctx.obj["workspace"], source)
    for warning in report.warnings:
        click.echo(f"warning: {warning}", err=True)
    _emit(
        ctx,
        {
            "entries_added": report.entries_added,
            "files_processed": report.files_processed,
            "warnings": report.warnings,
        },
        f"processed {report.files_processed} files, added {report.entries_added} entries",
    )


@main.command("search")
@click.argument("query", nargs=-1)
@click.option("--tag", "-t", "tags", multiple=True, help="Required tag.")
@click.option("--exclude-tag", "-x", "excluded", multiple=True, help="Excluded tag.")
@click.option("--limit", default=10, show_default=True)
@click.option("--as-of", default=None, help="Decay reference date (default: newest entry).")
@click.pass_context
def search_cmd(ctx, query, tags, excluded, limit, as_of):
    """Decay-weighted lexical search over the experiential layer."""
    state = _state(ctx)
    shard = shard_for_state(state)
    hits = search(
        shard,
        state.corpus.entries,
        SearchQuery(
            text=" ".join(query),
            required_tags=set(tags),
            excluded_tags=set(excluded),
            limit=limit,
            as_of=Date.fromisoformat(as_of) if as_of else None,
        ),
        decay_lambda=state.config.decay_lambda,
    )
    doc = [
        {
            "entry_id": h.entry_id,
            "lexical_score": h.lexical_score,
            "decay_factor": h.decay_factor,
            "final_score": h.final_score,
            "snippet": h.snippet,
        }
        for h in hits
    ]
    lines = [f"{h.final_score:10.4f}  {h.entry_id}  {h.snippet}" for h in hits]
    _emit(ctx, doc, "\n".join(lines) if lines else "no matches")


def _scope_from_flags(tags, categories, date_from, date_to, max_entries, all_entries, include_consolidated) -> Scope:
    return Scope(
        all_entries=all_entries,
        date_from=Date.fromisoformat(date_from) if date_from else None,
        date_to=Date.fromisoformat(date_to) if date_to else None,
        required_tags=list(tags),
        categories=list(categories),
        max_entries=max_entries,
        include_consolidated=include_consolidated,
    )


@main.group()
def crystallize():
    """Open, decide and integrate crystallization batches."""


@crystallize.command("open")
@click.option("--tags", "-t", multiple=True, help="Required tag.")
@click.option("--category", "categories", multiple=True, help="Required category.")
@click.option("--from", "date_from", default=None, help="Earliest entry date.")
@click.option("--to", "date_to", default=None, help="Latest entry date.")
@click.option("--max-entries", type=int, default=None)
@click.option("--all", "all_entries", is_flag=True, help="Scope over every entry.")
@click.option("--include-consolidated", is_flag=True)
@click.pass_context
def crystallize_open(ctx, tags, categories, date_from, date_to, max_entries, all_entries, include_consolidated):
    """Select entries, extract pattern candidates, open a review batch."""
    scope = _scope_from_flags(
        tags, categories, date_from, date_to, max_entries, all_entries, include_consolidated
    )
    batch = open_batch(ctx.obj["workspace"], scope, config_overrides=ctx.obj["overrides"])
    _emit(
        ctx,
        batch.to_doc(),
        f"{batch.batch_id}: {len(batch.candidates)} candidate(s), status {batch.status}",
    )


def _print_candidate(candidate: PatternCandidate) -> None:
    flag = " (weak)" if candidate.weak else ""
    click.echo(f"\n{candidate.id}{flag}  {''.join('[' + t + ']' for t in candidate.tag_signature)}")
    click.echo(f"  score {candidate.score:.4f}, support {len(candidate.support_entries)}, "
               f"proposed {candidate.proposed_category}")
    click.echo(f"  exemplar: {candidate.exemplar_text[:200]}")


def _interactive_decisions(batch: ReviewBatch) -> dict:
    """Terminal fallback for the review step: approve/reject/edit each candidate."""
    decisions = []
    click.echo(f"reviewing {batch.batch_id}: {len(batch.candidates)} candidate(s)")
    for candidate in batch.candidates:
        _print_candidate(candidate)
        verdict = click.prompt(
            "  verdict", type=click.Choice(["approve", "reject", "edit"]), default="reject"
        )
        decision: dict = {"candidate_id": candidate.id, "verdict": verdict}
        if verdict == "reject":
            decisions.append(decision)
            continue
        if verdict == "edit":
            decision["edited_text"] = click.prompt("  edited text")
        principle = click.prompt(
            "  principle text (blank to write a skill reference instead)",
            default="",
            show_default=False,
        )
        if principle:
            decision["principle_text"] = principle
        else:
            decision["target_skill"] = click.prompt("  target skill (kebab-case)")
        notes = {}
        while True:
            pair = click.prompt(
                "  generalize literal=placeholder (blank to finish)",
                default="",
                show_default=False,
            )
            if not pair:
                break
            literal, sep, placeholder = pair.partition("=")
            if sep:
                notes[literal] = placeholder
        if notes:
            decision["generalization_notes"] = notes
        decisions.append(decision)
    return {"batch_id": batch.batch_id, "decisions": decisions}


def _apply_and_report(ctx, batch_id: str, doc: dict, run_integrate: bool) -> None:
    drafts = apply_decisions(
        ctx.obj["workspace"], batch_id, doc, config_overrides=ctx.obj["overrides"]
    )
    state = load_state(ctx.obj["workspace"])
    outcomes = state.batches[batch_id].outcomes
    result: dict = {"batch_id": batch_id, "status": "decided", "outcomes": outcomes}
    lines = [f"{batch_id} decided: {len(drafts)} validated draft(s)"]
    lines += [
        f"  {o['candidate_id']}: {o['status']}"
        + (f" ({o['reason']})" if "reason" in o else "")
        for o in outcomes
    ]
    if run_integrate:
        report = integrate(ctx.obj["workspace"], batch_id)
        result["integration"] = report.to_doc()
        eta = "n/a" if report.eta is None else f"{report.eta:.6f}"
        lines.append(
            f"integrated: {report.assets_written} asset(s), "
            f"{report.entries_consolidated} entries consolidated, eta {eta}"
        )
    _emit(ctx, result, "\n".join(lines))


@crystallize.command("decide")
@click.argument("batch_id")
@click.option("--file", "decisions_file", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--integrate", "run_integrate", is_flag=True, help="Integrate after deciding.")
@click.pass_context
def crystallize_decide(ctx, batch_id: str, decisions_file: Path | None, run_integrate: bool):
    """Apply a decisions document (or review interactively without one)."""
    if decisions_file is not None:
        doc = json.loads(decisions_file.read_text("utf-8"))
    else:
        state = _state(ctx)
        batch = state.batches.get(batch_id)
        if batch is None:
            raise UnknownBatch(f"no such batch: {batch_id}")
        doc = _interactive_decisions(batch)
    _apply_and_report(ctx, batch_id, doc, run_integrate)


@crystallize.command("integrate")
@click.argument("batch_id")
@click.pass_context
def crystallize_integrate(ctx, batch_id: str):
    """Write a decided batch's validated drafts into the knowledge state."""
    report = integrate(ctx.obj["workspace"], batch_id)
    eta = "n/a" if report.eta is None else f"{report.eta:.6f}"
    _emit(
        ctx,
        report.to_doc(),
        f"integrated {batch_id}: {report.assets_written} asset(s), "
        f"{report.entries_consolidated} entries consolidated, "
        f"{report.principles_updated} principle(s), eta {eta}",
    )


@main.command()
@click.argument("batch_id", required=False)
@click.pass_context
def review(ctx, batch_id: str | None):
    """Interactively review the (or a) pending batch, then offer to integrate."""
    state = _state(ctx)
    if batch_id is None:
        pending = sorted(b.batch_id for b in state.batches.values() if b.status == "pending")
        if not pending:
            click.echo("no pending batches")
            return
        batch_id = pending[0]
    batch = state.batches.get(batch_id)
    if batch is None:
        raise UnknownBatch(f"no such batch: {batch_id}")
    doc = _interactive_decisions(batch)
    run_integrate = click.confirm("integrate now?", default=False)
    _apply_and_report(ctx, batch_id, doc, run_integrate)


@main.command()
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Also write a per-batch time series.")
@click.pass_context
def metrics(ctx, csv_path: Path | None):
    """Value breakdown of the current knowledge state."""
    state = _state(ctx)
    breakdown = value(state)
    if csv_path is not None:
        rows = ["batch_id,integrated_at,entries_consolidated,delta_structure,eta"]
        for doc in state.history:
            eta = "" if doc.get("eta") is None else repr(doc["eta"])
            rows.append(
                f"{doc['batch_id']},{doc['integrated_at']},"
                f"{doc['entries_consolidated']},{doc['delta_structure']!r},{eta}"
            )
        csv_path.write_text("\n".join(rows) + "\n", "utf-8")
    _emit(
        ctx,
        breakdown.to_doc(),
        "\n".join(
            [
                f"breadth        {breakdown.breadth:.6f}",
                f"structure_raw  {breakdown.structure_raw:.6f}",
                f"structure_norm {breakdown.structure_norm:.6f}",
                f"align          {breakdown.align:.6f}",
                f"value          {breakdown.value:.6f}",
            ]
        ),
    )


@main.command()
@click.option("--from", "date_from", default=None, help="Window start date.")
@click.option("--to", "date_to", default=None, help="Window end date.")
@click.option("--ratings", type=click.Path(exists=True, path_type=Path), default=None,
              help='JSON file {"useful": n, "total": m}.')
@click.pass_context
def report(ctx, date_from: str | None, date_to: str | None, ratings: Path | None):
    """Development progression counts over a date window."""
    state = _state(ctx)
    ratings_doc = json.loads(ratings.read_text("utf-8")) if ratings else None
    prog = progression_report(
        state,
        window_from=Date.fromisoformat(date_from) if date_from else None,
        window_to=Date.fromisoformat(date_to) if date_to else None,
        ratings=ratings_doc,
    )
    doc = prog.to_doc()
    lines = [f"{k:22} {v}" for k, v in doc.items() if k != "window"]
    _emit(ctx, doc, "\n".join(lines))


@main.command()
@click.option("--now", "now_arg", default=None, help="Evaluate at this ISO timestamp.")
@click.pass_context
def triggers(ctx, now_arg: str | None):
    """Which crystallization triggers fire right now."""
    state = _state(ctx)
    if now_arg:
        now = datetime.fromisoformat(now_arg.replace("Z", "+00:00"))
        if now.tzinfo is None:
            now = now.replace(tzinfo=timezone.utc)
    else:
        now = datetime.now(timezone.utc)
    firings = check_triggers(state, now)
    doc = [f.to_doc() for f in firings]
    lines = [f"{f.mode}: {f.detail}" for f in firings]
    _emit(ctx, doc, "\n".join(lines) if lines else "no triggers firing")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
              default=None, help="Also serve a built review-board directory at /.")
@click.pass_context
def serve(ctx, host: str, port: int, ui_dir: Path | None):
    """Serve the review-board HTTP API over this workspace (foreground)."""
    import uvicorn

    from .gateway import create_app

    state = load_state(ctx.obj["workspace"])  # fail fast if not a workspace
    click.echo(f"serving workspace {state.root} on http://{host}:{port}")
    uvicorn.run(
        create_app(ctx.obj["workspace"], ui_dir=ui_dir),
        host=host,
        port=port,
        log_level="warning",
    )


if __name__ == "__main__":
    main()
