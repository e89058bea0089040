"""Experiential ingestion: log parsing, appends, transcript extraction,
bulk migration of historical documents.

The extraction function is rule-based and deterministic: explicit
bracket tags always win; untagged user turns are classified by a cue
lexicon; untagged agent turns are dropped. An LLM-backed extractor can
replace `extract_from_transcript` behind the same signature later.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime
from pathlib import Path

from .errors import EmptyBody, InvalidTag, ParseError, SourceMissing
from .index import content_hash, index_entry, load_shard, rebuild_index, save_shard
from .model import (
    CATEGORY_TAGS,
    TAG_TO_CATEGORY,
    Category,
    ExperientialEntry,
    KnowledgeState,
    LogWarning,
    category_of_tags,
    entry_id,
    is_valid_tag,
    parse_entry_lines,
    render_entry,
)
from .workspace import WriteSet, load_state, workspace_lock

BRACKET_TAG_RE = re.compile(r"\[([A-Z][A-Z0-9-]*)\]")
FILENAME_DATE_RE = re.compile(r"(\d{4}-\d{2}-\d{2})")

# Default cue phrases per category. Contextual annotations have no cue:
# they are reachable only through explicit tags.
DEFAULT_CUES: dict[Category, list[str]] = {
    Category.INSIGHT_FRAGMENT: ["i've realized", "the key thing about"],
    Category.ERROR_RECORD: ["i was wrong", "missed"],
    Category.PATTERN_OBSERVATION: ["every time", "tends to follow"],
    Category.REASONING_TRACE: ["because", "my reasoning"],
    Category.OPERATIONAL_RECORD: ["decided to", "i'll go with"],
}


@dataclass
class CueLexicon:
    cues: dict[Category, list[str]] = field(default_factory=lambda: {
        cat: list(phrases) for cat, phrases in DEFAULT_CUES.items()
    })

    def infer(self, text: str) -> Category | None:
        """Category of the earliest cue occurrence; declaration order breaks ties."""
        haystack = text.lower().replace("’", "'")
        best: tuple[int, int] | None = None
        best_category: Category | None = None
        for order, (category, phrases) in enumerate(self.cues.items()):
            for phrase in phrases:
                pos = haystack.find(phrase.lower())
                if pos < 0:
                    continue
                key = (pos, order)
                if best is None or key < best:
                    best = key
                    best_category = category
        return best_category

    @classmethod
    def load(cls, root: Path | str) -> CueLexicon:
        """Default lexicon, overridden by lexicon.json at workspace root."""
        path = Path(root) / "lexicon.json"
        if not path.is_file():
            return cls()
        try:
            doc = json.loads(path.read_text("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(str(path), getattr(exc, "lineno", 0), f"invalid JSON: {exc}") from exc
        cues: dict[Category, list[str]] = {}
        for name, phrases in doc.items():
            cues[Category(name)] = [str(p) for p in phrases]
        return cls(cues=cues)


@dataclass
class Turn:
    speaker: str  # "user" | "agent"
    text: str


@dataclass
class InteractionTranscript:
    turns: list[Turn]
    date: Date
    session_id: str


@dataclass
class MigrationReport:
    entries_added: int = 0
    files_processed: int = 0
    warnings: list[str] = field(default_factory=list)


def parse_daily_log(
    text: str, date: Date, lexicon: CueLexicon | None = None, filename: str = "<log>"
) -> tuple[list[ExperientialEntry], list[LogWarning]]:
    """Parse one daily log; total over arbitrary input.

    Category resolution order: first recognized category tag, then cue
    lexicon over the body, then the operational-record default bucket.
    """
    entries, warnings = parse_entry_lines(text, date, filename=filename)
    lexicon = lexicon or CueLexicon()
    for entry in entries:
        if category_of_tags(entry.tags) is None:
            entry.category = lexicon.infer(entry.body) or Category.OPERATIONAL_RECORD
    return entries, warnings


def _validate_tags(tags: list[str]) -> None:
    if not tags:
        raise InvalidTag("at least one tag is required")
    for tag in tags:
        if not is_valid_tag(tag):
            raise InvalidTag(f"invalid tag {tag!r} (expected [A-Z][A-Z0-9-]*)")


def _categorize(tags: list[str], body: str, lexicon: CueLexicon) -> tuple[list[str], Category]:
    """Resolve the category and make sure its tag is present in the written tags."""
    category = category_of_tags(tags)
    if category is None:
        category = lexicon.infer(body) or Category.OPERATIONAL_RECORD
        tags = [CATEGORY_TAGS[category]] + list(tags)
    return list(tags), category


def _next_sequence(root: Path, date: Date) -> int:
    path = root / "memory" / f"{date.isoformat()}.md"
    if not path.is_file():
        return 1
    text = path.read_bytes().decode("utf-8", errors="replace")
    entries, _ = parse_entry_lines(text, date)
    return len(entries) + 1


def _append_chunk(root: Path, date: Date, rendered: str) -> WriteSet:
    """Stage an append to a daily log; every previously written byte stays."""
    path = root / "memory" / f"{date.isoformat()}.md"
    existing = path.read_bytes() if path.is_file() else b""
    chunk = rendered.encode("utf-8")
    if existing and not existing.endswith(b"\n"):
        chunk = b"\n" + chunk
    ws = WriteSet(root)
    ws.put(f"memory/{date.isoformat()}.md", existing + chunk)
    return ws


def append_entry(
    root: Path | str,
    date: Date,
    tags: list[str],
    body: str,
    timestamp: str | None = None,
    context: dict | None = None,
) -> str:
    """Append one entry to the daily log; returns its id.

    Acquires the workspace lock, assigns the next sequence number for
    the date, writes the log atomically and updates the retrieval index
    incrementally.
    """
    body = body.strip()
    if not body:
        raise EmptyBody("entry body is empty after trimming")
    _validate_tags(tags)
    root = Path(root)
    with workspace_lock(root):
        lexicon = CueLexicon.load(root)
        tags, category = _categorize(tags, body, lexicon)
        entry = ExperientialEntry(
            id=entry_id(date, _next_sequence(root, date)),
            tags=tags,
            category=category,
            body=body,
            timestamp=timestamp,
            context=context,
        )
        ws = _append_chunk(root, date, render_entry(entry))
        ws.apply()
        _index_incrementally(root, entry)
    return entry.id


def _index_incrementally(root: Path, *entries: ExperientialEntry) -> None:
    shard = load_shard(root)
    if shard is None:
        shard = rebuild_index(load_state(root))
    else:
        for entry in entries:
            index_entry(shard, entry)
    save_shard(root, shard)


def parse_transcript(text: str, filename: str = "<transcript>") -> InteractionTranscript:
    """Read the JSON Lines transcript format.

    First line is a header {"session_id": ..., "date": "YYYY-MM-DD"};
    each following line is {"speaker": "user"|"agent", "text": ...}.
    """
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines:
        raise ParseError(filename, 0, "empty transcript")
    try:
        header = json.loads(lines[0])
        session_id = str(header["session_id"])
        date = Date.fromisoformat(str(header["date"]))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ParseError(filename, 1, f"bad transcript header: {exc}") from exc
    turns = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            doc = json.loads(line)
            speaker = str(doc["speaker"]).lower()
            if speaker not in ("user", "agent"):
                raise ValueError(f"unknown speaker {speaker!r}")
            turns.append(Turn(speaker=speaker, text=str(doc["text"])))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ParseError(filename, lineno, f"bad turn: {exc}") from exc
    if not turns:
        raise ParseError(filename, 1, "transcript has no turns")
    return InteractionTranscript(turns=turns, date=date, session_id=session_id)


def _strip_bracket_tags(text: str) -> str:
    stripped = BRACKET_TAG_RE.sub(" ", text)
    return " ".join(stripped.split())


def extract_from_transcript(
    transcript: InteractionTranscript, lexicon: CueLexicon | None = None
) -> list[ExperientialEntry]:
    """Deterministic rule-based extraction of experiential records.

    (a) turns with explicit bracket tags yield entries carrying those
        tags, whichever speaker wrote them;
    (b) untagged user turns matching a cue phrase yield an entry of the
        cued category, tagged with the category tag;
    (c) untagged agent turns yield nothing.

    Returned entries carry provisional sequence ids for the transcript
    date; ingestion re-assigns real ids on append.
    """
    lexicon = lexicon or CueLexicon()
    extracted: list[ExperientialEntry] = []
    for turn_index, turn in enumerate(transcript.turns):
        tags = list(dict.fromkeys(BRACKET_TAG_RE.findall(turn.text)))
        if tags:
            body = _strip_bracket_tags(turn.text)
            if not body:
                continue
            tags, category = _categorize(tags, body, lexicon)
        elif turn.speaker == "user":
            category = lexicon.infer(turn.text)
            if category is None:
                continue
            tags = [CATEGORY_TAGS[category]]
            body = turn.text.strip()
            if not body:
                continue
        else:
            continue
        extracted.append(
            ExperientialEntry(
                id=entry_id(transcript.date, len(extracted) + 1),
                tags=tags,
                category=category,
                body=body,
                context={"session_id": transcript.session_id, "turn": turn_index},
            )
        )
    return extracted


def ingest_transcript(root: Path | str, transcript: InteractionTranscript) -> list[str]:
    """Extract records from a transcript and append each to the log."""
    root = Path(root)
    lexicon = CueLexicon.load(root)
    extracted = extract_from_transcript(transcript, lexicon)
    ids = []
    for record in extracted:
        ids.append(
            append_entry(
                root,
                transcript.date,
                record.tags,
                record.body,
                timestamp=record.timestamp,
                context=record.context,
            )
        )
    return ids


def default_date_mapper(path: Path) -> Date:
    """Date from a YYYY-MM-DD filename pattern, else file modification time."""
    m = FILENAME_DATE_RE.search(path.name)
    if m:
        try:
            return Date.fromisoformat(m.group(1))
        except ValueError:
            pass
    return datetime.fromtimestamp(path.stat().st_mtime).date()


def migrate_corpus(
    root: Path | str,
    source_dir: Path | str,
    date_mapper=default_date_mapper,
    lexicon: CueLexicon | None = None,
) -> MigrationReport:
    """Bulk-convert historical documents into experiential entries.

    Each document splits on blank-line paragraphs; each paragraph
    becomes one entry. Content hashes recorded in the retrieval index
    make re-runs idempotent. Per-file failures are warnings, not aborts.
    """
    root = Path(root)
    source = Path(source_dir)
    if not source.is_dir():
        raise SourceMissing(f"source directory not found: {source}")
    report = MigrationReport()
    lexicon = lexicon or CueLexicon.load(root)

    with workspace_lock(root):
        state = load_state(root)
        shard = load_shard(root)
        if shard is None or len(shard.content_hashes) != len(state.corpus.entries):
            shard = rebuild_index(state)
        seen_hashes = set(shard.content_hashes.values())
        next_seq: dict[Date, int] = {}
        new_entries: list[ExperientialEntry] = []
        pending: dict[Date, list[str]] = {}

        files = sorted(
            p for p in source.rglob("*") if p.is_file() and p.suffix.lower() in (".md", ".txt")
        )
        for path in files:
            report.files_processed += 1
            try:
                text = path.read_bytes().decode("utf-8", errors="replace")
                day = date_mapper(path)
            except (OSError, ValueError) as exc:
                report.warnings.append(f"{path.name}: {exc}")
                continue
            for paragraph in re.split(r"\n\s*\n", text):
                lines = [line.rstrip() for line in paragraph.strip("\n").split("\n")]
                body = "\n".join(lines).strip()
                if not body:
                    continue
                tags = list(dict.fromkeys(BRACKET_TAG_RE.findall(body)))
                if tags:
                    body = _strip_bracket_tags(body)
                    if not body:
                        continue
                digest = content_hash(body)
                if digest in seen_hashes:
                    continue
                seen_hashes.add(digest)
                tags, category = _categorize(tags, body, lexicon)
                if day not in next_seq:
                    next_seq[day] = _next_sequence(root, day)
                entry = ExperientialEntry(
                    id=entry_id(day, next_seq[day]),
                    tags=tags,
                    category=category,
                    body=body,
                    context={"source": path.name},
                )
                next_seq[day] += 1
                new_entries.append(entry)
                pending.setdefault(day, []).append(render_entry(entry))
                report.entries_added += 1

        if new_entries:
            ws = WriteSet(root)
            for day, chunks in pending.items():
                path = root / "memory" / f"{day.isoformat()}.md"
                existing = path.read_bytes() if path.is_file() else b""
                blob = "".join(chunks).encode("utf-8")
                if existing and not existing.endswith(b"\n"):
                    blob = b"\n" + blob
                ws.put(f"memory/{day.isoformat()}.md", existing + blob)
            ws.apply()
            for entry in new_entries:
                index_entry(shard, entry)
            save_shard(root, shard)
    return report
