"""Knowledge-state data model and the plain-text grammars it lives in.

The state is a three-layer tuple:

* constitutional layer -- four markdown documents (SOUL.md, AGENTS.md,
  USER.md, MEMORY.md) plus structured principles parsed out of MEMORY.md;
* skill layer -- skill folders (SKILL.md + references/ + scripts/) with
  engine-kept version records in a sidecar asset.json;
* experiential layer -- append-only daily logs of tagged entries.

Documents and reference files are stored verbatim (strings); the
structured views (principles, reference sections) are parsed on demand
so that persisting an unmodified state is byte-identical to what was
loaded.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from datetime import date as Date
from enum import Enum
from pathlib import Path

from .errors import InvalidTag, InvariantViolation

CONSTITUTIONAL_DOCS = ("SOUL.md", "AGENTS.md", "USER.md", "MEMORY.md")

TAG_RE = re.compile(r"[A-Z][A-Z0-9-]*")
SKILL_NAME_RE = re.compile(r"[a-z0-9]+(-[a-z0-9]+)*")

# Daily-log entry line: "- " + optional "HH:MM " + one or more "[TAG]" + " " + body.
ENTRY_LINE_RE = re.compile(
    r"^- (?:(?P<time>(?:[01]\d|2[0-3]):[0-5]\d) )?"
    r"(?P<tags>(?:\[[A-Z][A-Z0-9-]*\])+) (?P<body>.+)$"
)
CONTEXT_COMMENT_RE = re.compile(r"^(?P<body>.*?) <!-- (?P<json>\{.*\}) -->$")

PRINCIPLE_LINE_RE = re.compile(
    r"^- \[(?P<status>proposed|confirmed|contradicted)\] "
    r"\((?P<id>[a-z0-9-]+)\) (?P<text>.*?)"
    r"(?: <!-- sources: (?P<sources>[^>]*) -->)?$"
)

SECTION_META_RE = re.compile(r"^<!-- nfd:section (?P<pairs>[^>]*) -->$")
CONDITIONS_STUB = "(unspecified)"


class Category(str, Enum):
    """The six experiential knowledge categories."""

    OPERATIONAL_RECORD = "OperationalRecord"
    REASONING_TRACE = "ReasoningTrace"
    PATTERN_OBSERVATION = "PatternObservation"
    ERROR_RECORD = "ErrorRecord"
    CONTEXTUAL_ANNOTATION = "ContextualAnnotation"
    INSIGHT_FRAGMENT = "InsightFragment"


# Canonical tag token written for each category when an entry carries no
# category tag of its own.
CATEGORY_TAGS: dict[Category, str] = {
    Category.OPERATIONAL_RECORD: "OPERATIONAL",
    Category.REASONING_TRACE: "REASONING",
    Category.PATTERN_OBSERVATION: "PATTERN",
    Category.ERROR_RECORD: "ERROR",
    Category.CONTEXTUAL_ANNOTATION: "CONTEXT",
    Category.INSIGHT_FRAGMENT: "INSIGHT",
}

# Tag tokens recognized as naming a category. DECISION is an accepted
# alias for operational records (decisions made, actions taken).
TAG_TO_CATEGORY: dict[str, Category] = {
    "OPERATIONAL": Category.OPERATIONAL_RECORD,
    "DECISION": Category.OPERATIONAL_RECORD,
    "REASONING": Category.REASONING_TRACE,
    "PATTERN": Category.PATTERN_OBSERVATION,
    "ERROR": Category.ERROR_RECORD,
    "CONTEXT": Category.CONTEXTUAL_ANNOTATION,
    "INSIGHT": Category.INSIGHT_FRAGMENT,
}


class LifecyclePhase(str, Enum):
    """Advisory lifecycle marker, set by the user, never inferred."""

    BOOTSTRAP = "bootstrap"
    INITIAL_NURTURING = "initial-nurturing"
    STRUCTURED_NURTURING = "structured-nurturing"
    MATURE = "mature"


def canonical_json(obj) -> str:
    """Serialize engine JSON documents: sorted keys, 2-space indent, LF."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def is_valid_tag(tag: str) -> bool:
    return TAG_RE.fullmatch(tag) is not None


def category_of_tags(tags: list[str]) -> Category | None:
    """First tag that names a category, if any."""
    for tag in tags:
        if tag in TAG_TO_CATEGORY:
            return TAG_TO_CATEGORY[tag]
    return None


def entry_id(date: Date, seq: int) -> str:
    return f"{date.isoformat()}#{seq:04d}"


def parse_entry_id(eid: str) -> tuple[Date, int]:
    date_part, _, seq_part = eid.partition("#")
    return Date.fromisoformat(date_part), int(seq_part)


@dataclass
class ExperientialEntry:
    """One tagged record in a daily log. The unit of accumulation."""

    id: str
    tags: list[str]
    category: Category
    body: str
    timestamp: str | None = None          # "HH:MM" or None
    context: dict | None = None
    consolidated_into: tuple[str, int] | None = None  # (asset name, version)

    @property
    def date(self) -> Date:
        return parse_entry_id(self.id)[0]

    @property
    def seq(self) -> int:
        return parse_entry_id(self.id)[1]


def render_entry(entry: ExperientialEntry) -> str:
    """Canonical daily-log text for one entry (may span multiple lines)."""
    head = "- "
    if entry.timestamp:
        head += f"{entry.timestamp} "
    head += "".join(f"[{t}]" for t in entry.tags) + " "
    body_lines = entry.body.split("\n")
    if entry.context is not None:
        ctx = json.dumps(entry.context, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        body_lines[-1] = f"{body_lines[-1]} <!-- {ctx} -->"
    lines = [head + body_lines[0]]
    lines.extend("  " + line for line in body_lines[1:])
    return "\n".join(lines) + "\n"


@dataclass
class LogWarning:
    file: str
    line: int
    reason: str

    def __str__(self) -> str:
        return f"{self.file}:{self.line}: {self.reason}"


def parse_entry_lines(
    text: str, date: Date, filename: str = "<log>", start_seq: int = 1
) -> tuple[list[ExperientialEntry], list[LogWarning]]:
    """Parse daily-log text into entries, numbered #0001... in file order.

    Total over arbitrary input: lines that are neither entry lines nor
    two-space continuations become warnings, never exceptions. The
    category is the first recognized category tag; callers may refine it
    via the cue lexicon afterwards.
    """
    entries: list[ExperientialEntry] = []
    warnings: list[LogWarning] = []
    seq = start_seq
    current: ExperientialEntry | None = None

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line == "" or line == "\r":
            current = None
            continue
        line = line.rstrip("\r")
        if line.startswith("  ") and current is not None:
            current.body += "\n" + line[2:]
            continue
        m = ENTRY_LINE_RE.match(line)
        if m is None:
            current = None
            if line.strip():
                warnings.append(LogWarning(filename, lineno, "not an entry line, ignored"))
            continue
        tags = TAG_RE.findall(m.group("tags"))
        body = m.group("body")
        if not body.strip():
            current = None
            warnings.append(LogWarning(filename, lineno, "entry has empty body, ignored"))
            continue
        current = ExperientialEntry(
            id=entry_id(date, seq),
            tags=tags,
            category=category_of_tags(tags) or Category.OPERATIONAL_RECORD,
            body=body,
            timestamp=m.group("time"),
        )
        entries.append(current)
        seq += 1

    # Trailing context comments are split out once bodies are complete.
    for entry in entries:
        head, _, last = entry.body.rpartition("\n")
        m = CONTEXT_COMMENT_RE.match(last)
        if m and m.group("body").strip():
            try:
                ctx = json.loads(m.group("json"))
            except json.JSONDecodeError:
                continue
            if isinstance(ctx, dict):
                entry.context = ctx
                entry.body = (head + "\n" if head else "") + m.group("body")
    return entries, warnings


def render_daily_log(entries: list[ExperientialEntry]) -> str:
    return "".join(render_entry(e) for e in entries)


@dataclass
class Principle:
    """One-sentence constitutional directive with review provenance."""

    id: str
    text: str
    status: str = "proposed"               # proposed | confirmed | contradicted
    source_entries: list[str] = field(default_factory=list)
    user_origin: bool = False


def parse_principles(memory_text: str) -> list[Principle]:
    """Extract the '## Principles' block of MEMORY.md as structured records."""
    principles: list[Principle] = []
    in_section = False
    for line in memory_text.split("\n"):
        if line.startswith("## "):
            in_section = line.strip() == "## Principles"
            continue
        if not in_section:
            continue
        m = PRINCIPLE_LINE_RE.match(line)
        if not m:
            continue
        sources = [s.strip() for s in (m.group("sources") or "").split(",") if s.strip()]
        user_origin = "user" in sources
        principles.append(
            Principle(
                id=m.group("id"),
                text=m.group("text"),
                status=m.group("status"),
                source_entries=[s for s in sources if s != "user"],
                user_origin=user_origin,
            )
        )
    return principles


def render_principle(p: Principle) -> str:
    sources = list(p.source_entries)
    if p.user_origin:
        sources.append("user")
    line = f"- [{p.status}] ({p.id}) {p.text}"
    if sources:
        line += f" <!-- sources: {', '.join(sources)} -->"
    return line


def splice_principles(memory_text: str, principles: list[Principle]) -> str:
    """Rewrite the '## Principles' section of MEMORY.md, preserving the rest."""
    block = "## Principles\n\n" + "\n".join(render_principle(p) for p in principles) + "\n"
    lines = memory_text.split("\n")
    out: list[str] = []
    i = 0
    spliced = False
    while i < len(lines):
        if lines[i].strip() == "## Principles":
            out.append(block.rstrip("\n"))
            i += 1
            while i < len(lines) and not lines[i].startswith("## "):
                i += 1
            spliced = True
            continue
        out.append(lines[i])
        i += 1
    text = "\n".join(out)
    if not spliced:
        if not text.endswith("\n"):
            text += "\n"
        text += "\n" + block
    if not text.endswith("\n"):
        text += "\n"
    return text


@dataclass
class ReferenceSection:
    """One crystallized block inside a skill reference file.

    Sections are a parsed view over the markdown; flags with no explicit
    metadata comment default to unvalidated hand-written content.
    """

    heading: str                            # "[ERROR][SECTOR-SPECIFIC]"
    body: str
    conditions: list[str] = field(default_factory=list)
    examples: list[str] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)
    validated: bool = False
    decontextualized: bool = False
    category: Category | None = None
    batch_id: str | None = None

    @property
    def has_examples(self) -> bool:
        return len(self.examples) > 0

    @property
    def has_conditions(self) -> bool:
        return any(c != CONDITIONS_STUB for c in self.conditions)


def parse_reference_sections(text: str) -> list[ReferenceSection]:
    """Parse '## ' sections out of a reference file. Never raises."""
    sections: list[ReferenceSection] = []
    current: ReferenceSection | None = None
    bucket: str | None = None
    body_lines: list[str] = []

    def flush_body():
        if current is not None and body_lines:
            current.body = "\n".join(body_lines).strip("\n")

    for line in text.split("\n"):
        if line.startswith("## ") and not line.startswith("###"):
            flush_body()
            current = ReferenceSection(heading=line[3:].strip(), body="")
            sections.append(current)
            bucket = None
            body_lines = []
            continue
        if current is None:
            continue
        meta = SECTION_META_RE.match(line)
        if meta:
            for pair in meta.group("pairs").split():
                key, _, value = pair.partition("=")
                if key == "validated":
                    current.validated = value == "true"
                elif key == "decontextualized":
                    current.decontextualized = value == "true"
                elif key == "batch":
                    current.batch_id = value
                elif key == "category":
                    try:
                        current.category = Category(value)
                    except ValueError:
                        pass
            continue
        if line.startswith("### "):
            flush_body()
            body_lines = []
            name = line[4:].strip().lower()
            bucket = name if name in ("conditions", "examples", "provenance") else None
            continue
        if bucket and line.startswith("- "):
            item = line[2:]
            if bucket == "conditions":
                current.conditions.append(item)
            elif bucket == "examples":
                current.examples.append(item)
            else:
                current.provenance.append(item.strip())
            continue
        if bucket is None:
            body_lines.append(line)
    flush_body()
    return sections


def render_reference_section(section: ReferenceSection) -> str:
    """Canonical markdown for an engine-written reference section."""
    parts = [f"## {section.heading}", "", section.body.rstrip("\n"), ""]
    parts += ["### Conditions", ""]
    conditions = section.conditions or [CONDITIONS_STUB]
    parts += [f"- {c}" for c in conditions]
    parts.append("")
    if section.examples:
        parts += ["### Examples", ""]
        parts += [f"- {e}" for e in section.examples]
        parts.append("")
    parts += ["### Provenance", ""]
    parts += [f"- {p}" for p in section.provenance]
    parts.append("")
    meta = (
        f"<!-- nfd:section batch={section.batch_id} category={section.category.value} "
        f"decontextualized={'true' if section.decontextualized else 'false'} "
        f"validated={'true' if section.validated else 'false'} -->"
    )
    parts.append(meta)
    return "\n".join(parts) + "\n"


@dataclass
class VersionRecord:
    version: int
    batch_id: str
    timestamp: str
    change_summary: str
    content_hash: str

    def to_doc(self) -> dict:
        return {
            "version": self.version,
            "batch_id": self.batch_id,
            "timestamp": self.timestamp,
            "change_summary": self.change_summary,
            "content_hash": self.content_hash,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> VersionRecord:
        return cls(
            version=int(doc["version"]),
            batch_id=str(doc["batch_id"]),
            timestamp=str(doc["timestamp"]),
            change_summary=str(doc["change_summary"]),
            content_hash=str(doc["content_hash"]),
        )


@dataclass
class SkillAsset:
    """A skill folder: instructions, reference files, scripts, history."""

    name: str
    instructions: str = ""
    references: dict[str, str] = field(default_factory=dict)
    scripts: dict[str, bytes] = field(default_factory=dict)
    versions: list[VersionRecord] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)

    def sections(self) -> list[ReferenceSection]:
        out: list[ReferenceSection] = []
        for filename in sorted(self.references):
            out.extend(parse_reference_sections(self.references[filename]))
        return out

    @property
    def flags(self) -> dict[str, bool]:
        sections = self.sections()
        return {
            "validated": any(s.validated for s in sections),
            "decontextualized": any(s.decontextualized for s in sections),
            "has_examples": any(s.has_examples for s in sections),
            "has_conditions": any(s.has_conditions for s in sections),
        }

    def content_hash(self) -> str:
        """Hash of the serialized asset: SKILL.md, references, scripts."""
        h = hashlib.sha256()
        h.update(b"SKILL.md\x00" + self.instructions.encode("utf-8") + b"\x00")
        for name in sorted(self.references):
            h.update(f"references/{name}".encode() + b"\x00")
            h.update(self.references[name].encode("utf-8") + b"\x00")
        for name in sorted(self.scripts):
            h.update(f"scripts/{name}".encode() + b"\x00" + self.scripts[name] + b"\x00")
        return h.hexdigest()


@dataclass
class ConsolidationRecord:
    """Marks entries as absorbed into an asset version. Entries stay put."""

    batch_id: str
    entry_ids: list[str]
    asset_name: str
    asset_version: int

    def to_doc(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "entry_ids": list(self.entry_ids),
            "asset_name": self.asset_name,
            "asset_version": self.asset_version,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> ConsolidationRecord:
        return cls(
            batch_id=str(doc["batch_id"]),
            entry_ids=[str(e) for e in doc["entry_ids"]],
            asset_name=str(doc["asset_name"]),
            asset_version=int(doc["asset_version"]),
        )


@dataclass
class ExperientialCorpus:
    entries: list[ExperientialEntry] = field(default_factory=list)
    archived_groups: list[ConsolidationRecord] = field(default_factory=list)

    def by_id(self) -> dict[str, ExperientialEntry]:
        return {e.id: e for e in self.entries}

    def unconsolidated(self) -> list[ExperientialEntry]:
        return [e for e in self.entries if e.consolidated_into is None]

    def apply_consolidation_marks(self) -> None:
        """Derive entry.consolidated_into from the archived-group records."""
        index = self.by_id()
        for entry in self.entries:
            entry.consolidated_into = None
        for record in self.archived_groups:
            for eid in record.entry_ids:
                entry = index.get(eid)
                if entry is not None and entry.consolidated_into is None:
                    entry.consolidated_into = (record.asset_name, record.asset_version)


@dataclass
class ConstitutionalLayer:
    documents: dict[str, str]

    @property
    def principles(self) -> list[Principle]:
        return parse_principles(self.documents.get("MEMORY.md", ""))

    def set_principles(self, principles: list[Principle]) -> None:
        self.documents["MEMORY.md"] = splice_principles(
            self.documents.get("MEMORY.md", ""), principles
        )


@dataclass
class EngineConfig:
    """Tunable weights and thresholds, persisted as nfd.json."""

    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3
    constitutional_budget_tokens: int = 2000
    min_support: int = 3
    similarity_threshold: float = 0.35
    decay_lambda: float = 0.01
    n_sat: int = 500
    s_sat: int = 20
    threshold_trigger: int = 50
    schedule: str = "manual"

    FIELD_TYPES = {
        "alpha": float, "beta": float, "gamma": float,
        "constitutional_budget_tokens": int, "min_support": int,
        "similarity_threshold": float, "decay_lambda": float,
        "n_sat": int, "s_sat": int, "threshold_trigger": int,
        "schedule": str,
    }

    def validate(self) -> None:
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise InvariantViolation(
                f"weights must sum to 1: alpha+beta+gamma = "
                f"{self.alpha + self.beta + self.gamma}"
            )
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise InvariantViolation("weights must be non-negative")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise InvariantViolation("similarity_threshold must be in [0,1]")

    def to_doc(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELD_TYPES}

    @classmethod
    def from_doc(cls, doc: dict) -> EngineConfig:
        kwargs = {}
        for name, typ in cls.FIELD_TYPES.items():
            if name in doc:
                kwargs[name] = typ(doc[name])
        return cls(**kwargs)

    def with_overrides(self, overrides: dict[str, object]) -> EngineConfig:
        unknown = set(overrides) - set(self.FIELD_TYPES)
        if unknown:
            raise InvalidTag(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = replace(self, **{k: self.FIELD_TYPES[k](v) for k, v in overrides.items()})
        cfg.validate()
        return cfg


@dataclass
class Scope:
    """Entry selection for one crystallization run."""

    all_entries: bool = False
    date_from: Date | None = None
    date_to: Date | None = None
    required_tags: list[str] = field(default_factory=list)
    categories: list[str] = field(default_factory=list)
    max_entries: int | None = None
    include_consolidated: bool = False

    def is_constrained(self) -> bool:
        return bool(
            self.all_entries
            or self.date_from
            or self.date_to
            or self.required_tags
            or self.categories
            or self.max_entries
        )

    def to_doc(self) -> dict:
        return {
            "all_entries": self.all_entries,
            "date_from": self.date_from.isoformat() if self.date_from else None,
            "date_to": self.date_to.isoformat() if self.date_to else None,
            "required_tags": sorted(self.required_tags),
            "categories": sorted(self.categories),
            "max_entries": self.max_entries,
            "include_consolidated": self.include_consolidated,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> Scope:
        return cls(
            all_entries=bool(doc.get("all_entries", False)),
            date_from=Date.fromisoformat(doc["date_from"]) if doc.get("date_from") else None,
            date_to=Date.fromisoformat(doc["date_to"]) if doc.get("date_to") else None,
            required_tags=[str(t) for t in doc.get("required_tags", [])],
            categories=[str(c) for c in doc.get("categories", [])],
            max_entries=int(doc["max_entries"]) if doc.get("max_entries") else None,
            include_consolidated=bool(doc.get("include_consolidated", False)),
        )


@dataclass
class PatternCandidate:
    """A recurring regularity mined from the corpus, awaiting review."""

    id: str
    tag_signature: list[str]               # sorted tag set
    support_entries: list[str]
    score: float
    exemplar_text: str
    proposed_category: str                 # SkillReference | ErrorPattern | ...
    weak: bool = False

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "tag_signature": list(self.tag_signature),
            "support_entries": list(self.support_entries),
            "score": self.score,
            "exemplar_text": self.exemplar_text,
            "proposed_category": self.proposed_category,
            "weak": self.weak,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> PatternCandidate:
        return cls(
            id=str(doc["id"]),
            tag_signature=[str(t) for t in doc["tag_signature"]],
            support_entries=[str(e) for e in doc["support_entries"]],
            score=float(doc["score"]),
            exemplar_text=str(doc["exemplar_text"]),
            proposed_category=str(doc["proposed_category"]),
            weak=bool(doc.get("weak", False)),
        )


BATCH_STATUSES = ("pending", "decided", "integrated")


@dataclass
class ReviewBatch:
    batch_id: str
    created_at: str
    scope: Scope
    candidates: list[PatternCandidate]
    status: str = "pending"
    outcomes: list[dict] = field(default_factory=list)
    drafts: list[dict] = field(default_factory=list)

    def to_doc(self) -> dict:
        doc = {
            "batch_id": self.batch_id,
            "created_at": self.created_at,
            "scope": self.scope.to_doc(),
            "candidates": [c.to_doc() for c in self.candidates],
            "status": self.status,
        }
        if self.status != "pending":
            doc["outcomes"] = self.outcomes
            doc["drafts"] = self.drafts
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> ReviewBatch:
        return cls(
            batch_id=str(doc["batch_id"]),
            created_at=str(doc["created_at"]),
            scope=Scope.from_doc(doc.get("scope", {})),
            candidates=[PatternCandidate.from_doc(c) for c in doc.get("candidates", [])],
            status=str(doc.get("status", "pending")),
            outcomes=list(doc.get("outcomes", [])),
            drafts=list(doc.get("drafts", [])),
        )


@dataclass
class KnowledgeState:
    """In-memory snapshot of a whole workspace."""

    root: Path | None
    constitutional: ConstitutionalLayer
    skills: list[SkillAsset]
    corpus: ExperientialCorpus
    config: EngineConfig
    lifecycle_phase: str = LifecyclePhase.BOOTSTRAP.value
    batches: dict[str, ReviewBatch] = field(default_factory=dict)
    decisions_docs: dict[str, dict] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    warnings: list[LogWarning] = field(default_factory=list)

    def skill(self, name: str) -> SkillAsset | None:
        for asset in self.skills:
            if asset.name == name:
                return asset
        return None


def validate_state(state: KnowledgeState) -> None:
    """Check the cross-cutting state invariants; raise InvariantViolation.

    Run by persist_state and, in tests, after every mutating operation.
    """
    state.config.validate()

    names = [s.name for s in state.skills]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise InvariantViolation(f"duplicate skill names: {', '.join(sorted(dupes))}")
    for name in names:
        if not SKILL_NAME_RE.fullmatch(name):
            raise InvariantViolation(f"skill name not kebab-case: {name!r}")

    for doc in CONSTITUTIONAL_DOCS:
        if doc not in state.constitutional.documents:
            raise InvariantViolation(f"missing constitutional document {doc}")

    ids = [e.id for e in state.corpus.entries]
    if len(ids) != len(set(ids)):
        raise InvariantViolation("duplicate entry ids")
    keys = [parse_entry_id(i) for i in ids]
    if keys != sorted(keys):
        raise InvariantViolation("entries not ordered by (date, sequence)")

    known = set(ids)
    for skill in state.skills:
        for eid in skill.provenance:
            if eid not in known:
                raise InvariantViolation(
                    f"skill {skill.name} provenance references unknown entry {eid}"
                )
        if skill.flags["validated"] and len(skill.provenance) < state.config.min_support:
            raise InvariantViolation(
                f"skill {skill.name} has validated sections but only "
                f"{len(skill.provenance)} provenance entries (< min_support)"
            )
        versions = [v.version for v in skill.versions]
        if versions != sorted(versions) or len(versions) != len(set(versions)):
            raise InvariantViolation(f"skill {skill.name} versions not strictly increasing")
        if skill.versions and skill.versions[-1].content_hash != skill.content_hash():
            raise InvariantViolation(f"skill {skill.name} latest version hash mismatch")

    for entry in state.corpus.entries:
        if not entry.tags:
            raise InvariantViolation(f"entry {entry.id} has no tags")
        if not entry.body.strip():
            raise InvariantViolation(f"entry {entry.id} has empty body")
        for tag in entry.tags:
            if not is_valid_tag(tag):
                raise InvariantViolation(f"entry {entry.id} has invalid tag {tag!r}")

    for principle in state.constitutional.principles:
        if principle.status == "confirmed" and not principle.source_entries and not principle.user_origin:
            raise InvariantViolation(
                f"confirmed principle {principle.id} has no sources and no user-origin marker"
            )

    for batch in state.batches.values():
        if batch.status not in BATCH_STATUSES:
            raise InvariantViolation(f"batch {batch.batch_id} has unknown status {batch.status}")
        for candidate in batch.candidates:
            if candidate.score <= 0:
                raise InvariantViolation(
                    f"candidate {candidate.id} in {batch.batch_id} has non-positive score"
                )
