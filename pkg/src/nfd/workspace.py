"""Canonical on-disk workspace layout: scaffolding, load, persist, lock.

Layout::

    <root>/
      SOUL.md  AGENTS.md  USER.md  MEMORY.md
      nfd.json                     # engine config + lifecycle phase
      skills/<name>/SKILL.md
      skills/<name>/asset.json     # versions + provenance sidecar
      skills/<name>/references/*.md
      skills/<name>/scripts/*
      memory/YYYY-MM-DD.md         # append-only daily logs
      memory/consolidations.json   # consolidation marks (logs never rewritten)
      memory/index/                # engine-private retrieval cache
      crystal/pending/<batch>.json   # review batches; the status field
                                     # inside is authoritative, documents
                                     # stay put after deciding
      crystal/decisions/<batch>.json
      crystal/history/<batch>.json

Canonical form is a fixpoint: persist(load(ws)) leaves every byte
unchanged. All files are UTF-8, LF line endings, no BOM, exactly one
trailing newline. Mutating operations run under an exclusive advisory
lock file and apply their writes as an all-or-nothing set.
"""

from __future__ import annotations

import json
import os
import re
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path

from .errors import (
    InvariantViolation,
    IoFailure,
    LockHeld,
    NotAWorkspace,
    ParseError,
    TargetNotEmpty,
)
from .model import (
    CONSTITUTIONAL_DOCS,
    ConsolidationRecord,
    ConstitutionalLayer,
    EngineConfig,
    ExperientialCorpus,
    KnowledgeState,
    LifecyclePhase,
    LogWarning,
    ReviewBatch,
    SkillAsset,
    VersionRecord,
    canonical_json,
    parse_entry_lines,
    render_daily_log,
    validate_state,
)

CONFIG_FILE = "nfd.json"
LOCK_FILE = ".nfd.lock"
DAILY_LOG_RE = re.compile(r"^\d{4}-\d{2}-\d{2}\.md$")

DEFAULT_PERSONA = "A careful, evidence-first working partner."

SOUL_TEMPLATE = """# Soul

{persona}

Grown through use. Edit deliberately.
"""

AGENTS_TEMPLATE = """# Operating Rules

- Log decisions, errors, insights, and observed patterns as they happen.
- Keep this layer short: principles and pointers, not reference detail.
- Skill references hold the detail; the daily log holds the raw record.
"""

USER_TEMPLATE = """# User

(profile not yet established)
"""

MEMORY_TEMPLATE = """# Memory

## Principles

(none yet)
"""

SKILL_TEMPLATE = """# {name}

(instructions pending)
"""


def _gated(rel: str) -> bool:
    """Paths whose modification requires a decided review batch."""
    return rel in CONSTITUTIONAL_DOCS or rel.startswith("skills/")


class WriteSet:
    """Buffered workspace mutation, applied all-or-nothing.

    Files are staged as full contents; apply() snapshots the previous
    bytes of every target and rolls them back if any write fails, so a
    failed command leaves the tree byte-identical.
    """

    def __init__(self, root: Path):
        self.root = root
        self._files: dict[str, bytes] = {}

    def put(self, rel: str, data: bytes | str) -> None:
        if isinstance(data, str):
            data = data.encode("utf-8")
        self._files[rel] = data

    def changed(self) -> dict[str, bytes]:
        """Staged files whose content differs from what is on disk."""
        out = {}
        for rel, data in self._files.items():
            path = self.root / rel
            if not path.exists() or path.read_bytes() != data:
                out[rel] = data
        return out

    def gated_changes(self) -> list[str]:
        """Gated files whose staged content differs substantively.

        Pure canonicalization of a hand-edited file (line endings,
        trailing newline) is not a substantive change and passes the
        gate; new or altered content is.
        """
        out = []
        for rel, data in self.changed().items():
            if not _gated(rel):
                continue
            path = self.root / rel
            if path.exists():
                try:
                    current = path.read_bytes().decode("utf-8")
                except UnicodeDecodeError:
                    out.append(rel)
                    continue
                if _canonical_text(current).encode("utf-8") == data:
                    continue
            out.append(rel)
        return sorted(out)

    def apply(self) -> list[str]:
        """Write all changed files atomically; returns the paths written."""
        changed = self.changed()
        backups: dict[Path, bytes | None] = {}
        written: list[str] = []
        tmp = None
        try:
            for rel in sorted(changed):
                path = self.root / rel
                backups[path] = path.read_bytes() if path.exists() else None
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_bytes(changed[rel])
                os.replace(tmp, path)
                written.append(rel)
        except OSError as exc:
            if tmp is not None:
                tmp.unlink(missing_ok=True)
            for path, previous in backups.items():
                try:
                    if previous is None:
                        path.unlink(missing_ok=True)
                    else:
                        path.write_bytes(previous)
                except OSError:
                    pass
            raise IoFailure(f"write failed, workspace rolled back: {exc}") from exc
        return written


@contextmanager
def workspace_lock(root: Path):
    """Exclusive advisory lock; concurrent mutators fail fast."""
    lock_path = Path(root) / LOCK_FILE
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld(f"workspace lock already held: {lock_path}") from None
    except OSError as exc:
        raise IoFailure(f"cannot acquire lock: {exc}") from exc
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)


def is_workspace(root: Path) -> bool:
    return (Path(root) / CONFIG_FILE).is_file()


def scaffold_workspace(root: Path | str, persona: str | None = None) -> KnowledgeState:
    """Create a minimal bootable workspace and return its loaded state.

    Fails with TargetNotEmpty if the directory already holds any
    non-hidden file.
    """
    root = Path(root)
    if root.exists() and not root.is_dir():
        raise IoFailure(f"{root} exists and is not a directory")
    if root.is_dir():
        visible = [p.name for p in root.iterdir() if not p.name.startswith(".")]
        if visible:
            raise TargetNotEmpty(f"{root} already contains: {', '.join(sorted(visible))}")
    try:
        root.mkdir(parents=True, exist_ok=True)
        for sub in ("skills", "memory", "crystal/pending", "crystal/decisions", "crystal/history"):
            (root / sub).mkdir(parents=True, exist_ok=True)
        ws = WriteSet(root)
        ws.put("SOUL.md", SOUL_TEMPLATE.format(persona=persona or DEFAULT_PERSONA))
        ws.put("AGENTS.md", AGENTS_TEMPLATE)
        ws.put("USER.md", USER_TEMPLATE)
        ws.put("MEMORY.md", MEMORY_TEMPLATE)
        config_doc = EngineConfig().to_doc()
        config_doc["lifecycle_phase"] = LifecyclePhase.BOOTSTRAP.value
        ws.put(CONFIG_FILE, canonical_json(config_doc))
        ws.apply()
    except OSError as exc:
        raise IoFailure(f"scaffold failed: {exc}") from exc
    return load_state(root)


def _read_text(path: Path, warnings: list[LogWarning]) -> str:
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        text = data.decode("utf-8", errors="replace")
        warnings.append(LogWarning(str(path.name), 0, "invalid UTF-8, bytes replaced"))
    return text


def _load_json(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        line = getattr(exc, "lineno", 0)
        raise ParseError(str(path), line, f"invalid JSON: {exc}") from exc
    if not isinstance(doc, (dict, list)):
        raise ParseError(str(path), 0, "expected a JSON object")
    return doc


def _load_skill(skill_dir: Path, warnings: list[LogWarning]) -> SkillAsset:
    asset = SkillAsset(name=skill_dir.name)
    skill_md = skill_dir / "SKILL.md"
    if skill_md.is_file():
        asset.instructions = _read_text(skill_md, warnings)
    refs_dir = skill_dir / "references"
    if refs_dir.is_dir():
        for path in sorted(refs_dir.iterdir()):
            if path.is_file():
                asset.references[path.name] = _read_text(path, warnings)
    scripts_dir = skill_dir / "scripts"
    if scripts_dir.is_dir():
        for path in sorted(scripts_dir.iterdir()):
            if path.is_file():
                asset.scripts[path.name] = path.read_bytes()
    sidecar = skill_dir / "asset.json"
    if sidecar.is_file():
        doc = _load_json(sidecar)
        asset.versions = [VersionRecord.from_doc(v) for v in doc.get("versions", [])]
        asset.provenance = [str(e) for e in doc.get("provenance", [])]
    return asset


def load_state(root: Path | str) -> KnowledgeState:
    """Parse every layer of a workspace into a state snapshot.

    Malformed experiential lines become warnings on the returned state;
    only structurally unreadable JSON raises ParseError.
    """
    root = Path(root)
    if not is_workspace(root):
        raise NotAWorkspace(f"{root} has no {CONFIG_FILE}")

    warnings: list[LogWarning] = []
    config_doc = _load_json(root / CONFIG_FILE)
    config = EngineConfig.from_doc(config_doc)
    lifecycle = str(config_doc.get("lifecycle_phase", LifecyclePhase.BOOTSTRAP.value))

    documents: dict[str, str] = {}
    for name in CONSTITUTIONAL_DOCS:
        path = root / name
        documents[name] = _read_text(path, warnings) if path.is_file() else ""

    skills: list[SkillAsset] = []
    skills_dir = root / "skills"
    if skills_dir.is_dir():
        for skill_dir in sorted(skills_dir.iterdir()):
            if skill_dir.is_dir():
                skills.append(_load_skill(skill_dir, warnings))

    corpus = ExperientialCorpus()
    memory_dir = root / "memory"
    if memory_dir.is_dir():
        for path in sorted(memory_dir.iterdir()):
            if not path.is_file() or not DAILY_LOG_RE.match(path.name):
                continue
            day = Date.fromisoformat(path.stem)
            text = _read_text(path, warnings)
            entries, file_warnings = parse_entry_lines(text, day, filename=path.name)
            corpus.entries.extend(entries)
            warnings.extend(file_warnings)
    consolidations = memory_dir / "consolidations.json"
    if consolidations.is_file():
        doc = _load_json(consolidations)
        records = doc if isinstance(doc, list) else doc.get("records", [])
        corpus.archived_groups = [ConsolidationRecord.from_doc(r) for r in records]
    corpus.apply_consolidation_marks()

    batches: dict[str, ReviewBatch] = {}
    pending_dir = root / "crystal" / "pending"
    if pending_dir.is_dir():
        for path in sorted(pending_dir.glob("*.json")):
            batch = ReviewBatch.from_doc(_load_json(path))
            batches[batch.batch_id] = batch

    decisions_docs: dict[str, dict] = {}
    decisions_dir = root / "crystal" / "decisions"
    if decisions_dir.is_dir():
        for path in sorted(decisions_dir.glob("*.json")):
            doc = _load_json(path)
            decisions_docs[str(doc.get("batch_id", path.stem))] = doc

    history: list[dict] = []
    history_dir = root / "crystal" / "history"
    if history_dir.is_dir():
        for path in sorted(history_dir.glob("*.json")):
            history.append(_load_json(path))

    return KnowledgeState(
        root=root,
        constitutional=ConstitutionalLayer(documents=documents),
        skills=skills,
        corpus=corpus,
        config=config,
        lifecycle_phase=lifecycle,
        batches=batches,
        decisions_docs=decisions_docs,
        history=history,
        warnings=warnings,
    )


def state_write_set(state: KnowledgeState, root: Path) -> WriteSet:
    """Stage the canonical serialization of a full state."""
    ws = WriteSet(root)
    for name in CONSTITUTIONAL_DOCS:
        ws.put(name, _canonical_text(state.constitutional.documents.get(name, "")))

    config_doc = state.config.to_doc()
    config_doc["lifecycle_phase"] = state.lifecycle_phase
    ws.put(CONFIG_FILE, canonical_json(config_doc))

    for skill in state.skills:
        base = f"skills/{skill.name}"
        ws.put(f"{base}/SKILL.md", _canonical_text(skill.instructions))
        for filename, text in skill.references.items():
            ws.put(f"{base}/references/{filename}", _canonical_text(text))
        for filename, blob in skill.scripts.items():
            ws.put(f"{base}/scripts/{filename}", blob)
        if skill.versions or skill.provenance:
            sidecar = {
                "name": skill.name,
                "versions": [v.to_doc() for v in skill.versions],
                "provenance": list(skill.provenance),
            }
            ws.put(f"{base}/asset.json", canonical_json(sidecar))

    by_day: dict[Date, list] = {}
    for entry in state.corpus.entries:
        by_day.setdefault(entry.date, []).append(entry)
    for day, entries in by_day.items():
        ws.put(f"memory/{day.isoformat()}.md", render_daily_log(entries))
    if state.corpus.archived_groups:
        ws.put(
            "memory/consolidations.json",
            canonical_json([r.to_doc() for r in state.corpus.archived_groups]),
        )

    for batch in state.batches.values():
        ws.put(f"crystal/pending/{batch.batch_id}.json", canonical_json(batch.to_doc()))
    for batch_id, doc in state.decisions_docs.items():
        ws.put(f"crystal/decisions/{batch_id}.json", canonical_json(doc))
    for doc in state.history:
        ws.put(f"crystal/history/{doc['batch_id']}.json", canonical_json(doc))
    return ws


def persist_state(
    state: KnowledgeState,
    root: Path | str,
    authorized_batch: str | None = None,
    _bootstrap: bool = False,
) -> list[str]:
    """Serialize a state in canonical form; returns the files written.

    Writes to the skill layer or the constitutional documents are gated:
    they are refused unless `authorized_batch` names a batch in the state
    that has passed human review (status decided or integrated).
    """
    root = Path(root)
    validate_state(state)
    ws = state_write_set(state, root)
    gated = ws.gated_changes()
    if gated and not _bootstrap:
        batch = state.batches.get(authorized_batch or "")
        if batch is None or batch.status == "pending":
            raise InvariantViolation(
                "human gate: changes to "
                + ", ".join(gated)
                + " require a reviewed (decided) batch"
            )
    return ws.apply()


@dataclass
class ConstitutionalRender:
    text: str
    token_count: int
    over_budget: bool


def render_constitutional(state: KnowledgeState) -> ConstitutionalRender:
    """Concatenate the four documents in fixed order with header slots.

    Token counting is whitespace-delimited: deterministic and model-free.
    Over budget is flagged, never truncated.
    """
    parts = []
    for name in CONSTITUTIONAL_DOCS:
        parts.append(f"=== {name} ===")
        body = state.constitutional.documents.get(name, "")
        parts.append(body.rstrip("\n"))
    text = "\n\n".join(parts) + "\n"
    tokens = len(text.split())
    return ConstitutionalRender(
        text=text,
        token_count=tokens,
        over_budget=tokens > state.config.constitutional_budget_tokens,
    )


def _canonical_text(text: str) -> str:
    """LF endings, exactly one trailing newline (empty stays empty)."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    if not text:
        return ""
    return text.rstrip("\n") + "\n"
