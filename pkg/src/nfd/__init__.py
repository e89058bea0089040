"""nfd: a workspace-first knowledge engine.

Plain-file knowledge state in three layers (constitutional documents,
skill folders, append-only experiential logs), lexical retrieval with
recency decay, and a human-gated crystallization pipeline that turns
recurring log patterns into versioned skill references.
"""

from .errors import NfdError
from .ingest import (
    CueLexicon,
    append_entry,
    extract_from_transcript,
    ingest_transcript,
    migrate_corpus,
    parse_daily_log,
    parse_transcript,
)
from .crystallize import (
    apply_decisions,
    check_triggers,
    extract_patterns,
    integrate,
    open_batch,
    scope_filter,
)
from .index import IndexShard, SearchQuery, rebuild_index, search, shard_for_state
from .metrics import breadth, efficiency, progression_report, structure, value
from .model import EngineConfig, KnowledgeState, Scope, validate_state
from .workspace import (
    load_state,
    persist_state,
    render_constitutional,
    scaffold_workspace,
)

__version__ = "0.1.0"

__all__ = [
    "NfdError",
    "CueLexicon",
    "EngineConfig",
    "IndexShard",
    "KnowledgeState",
    "Scope",
    "SearchQuery",
    "append_entry",
    "apply_decisions",
    "breadth",
    "check_triggers",
    "efficiency",
    "extract_from_transcript",
    "extract_patterns",
    "ingest_transcript",
    "integrate",
    "load_state",
    "migrate_corpus",
    "open_batch",
    "parse_daily_log",
    "parse_transcript",
    "persist_state",
    "progression_report",
    "rebuild_index",
    "render_constitutional",
    "scaffold_workspace",
    "scope_filter",
    "search",
    "shard_for_state",
    "structure",
    "validate_state",
    "value",
]
