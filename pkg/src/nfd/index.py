"""Lexical retrieval over the experiential layer.

BM25 (k1=1.2, b=0.75, smoothed idf) over an inverted index, multiplied
by an exponential recency decay exp(-lambda * age_days). The backend is
deliberately offline and deterministic; an embedding backend could sit
behind the same search contract. Consolidated entries stay searchable.

The shard persists under memory/index/ as engine-private JSON; deleting
that directory is always recoverable via rebuild_index.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from .errors import IoFailure
from .model import ExperientialEntry, KnowledgeState, canonical_json

K1 = 1.2
B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")

INDEX_DIR = "memory/index"
INDEX_FILE = "memory/index/index.json"


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2.

    Shared by the index and the pattern extractor so similarity and
    retrieval agree on what a term is.
    """
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def content_hash(text: str) -> str:
    """64-bit content fingerprint, hex-encoded."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


@dataclass
class IndexShard:
    postings: dict[str, dict[str, int]] = field(default_factory=dict)  # term -> id -> tf
    doc_lengths: dict[str, int] = field(default_factory=dict)
    content_hashes: dict[str, str] = field(default_factory=dict)

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    def avg_doc_length(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def to_doc(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "doc_lengths": self.doc_lengths,
            "content_hashes": self.content_hashes,
            "postings": self.postings,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> IndexShard:
        return cls(
            postings={t: {i: int(tf) for i, tf in ids.items()} for t, ids in doc["postings"].items()},
            doc_lengths={i: int(n) for i, n in doc["doc_lengths"].items()},
            content_hashes={i: str(h) for i, h in doc["content_hashes"].items()},
        )

    def normalized(self) -> dict:
        """Order-independent view for incremental-vs-rebuild comparisons."""
        return {
            "doc_lengths": dict(sorted(self.doc_lengths.items())),
            "content_hashes": dict(sorted(self.content_hashes.items())),
            "postings": {
                t: dict(sorted(ids.items())) for t, ids in sorted(self.postings.items())
            },
        }


def index_entry(shard: IndexShard, entry: ExperientialEntry) -> IndexShard:
    """Add one entry to the shard in place (no-op if hash unchanged)."""
    previous = shard.content_hashes.get(entry.id)
    digest = content_hash(entry.body)
    if previous == digest:
        return shard
    if previous is not None:
        _remove(shard, entry.id)
    tokens = tokenize(entry.body)
    shard.doc_lengths[entry.id] = len(tokens)
    shard.content_hashes[entry.id] = digest
    for token in tokens:
        shard.postings.setdefault(token, {})
        shard.postings[token][entry.id] = shard.postings[token].get(entry.id, 0) + 1
    return shard


def _remove(shard: IndexShard, entry_id: str) -> None:
    shard.doc_lengths.pop(entry_id, None)
    shard.content_hashes.pop(entry_id, None)
    for term in list(shard.postings):
        shard.postings[term].pop(entry_id, None)
        if not shard.postings[term]:
            del shard.postings[term]


def rebuild_index(state: KnowledgeState) -> IndexShard:
    """Full deterministic scan of the corpus."""
    shard = IndexShard()
    for entry in state.corpus.entries:
        index_entry(shard, entry)
    return shard


@dataclass
class SearchQuery:
    text: str = ""
    required_tags: set[str] = field(default_factory=set)
    excluded_tags: set[str] = field(default_factory=set)
    date_from: Date | None = None
    date_to: Date | None = None
    limit: int = 10
    as_of: Date | None = None


@dataclass
class SearchHit:
    entry_id: str
    lexical_score: float
    decay_factor: float
    final_score: float
    snippet: str


def _snippet(body: str, width: int = 160) -> str:
    flat = " ".join(body.split())
    if len(flat) <= width:
        return flat
    return flat[: width - 3].rstrip() + "..."


def bm25_score(shard: IndexShard, query_tokens: list[str], doc_id: str) -> float:
    """Okapi BM25 with the +1-smoothed idf; duplicates in the query count."""
    n = shard.doc_count
    avgdl = shard.avg_doc_length()
    dl = shard.doc_lengths.get(doc_id, 0)
    score = 0.0
    for token in query_tokens:
        ids = shard.postings.get(token)
        if not ids:
            continue
        tf = ids.get(doc_id, 0)
        if tf == 0:
            continue
        df = len(ids)
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        norm = tf + K1 * (1.0 - B + B * dl / avgdl)
        score += idf * (tf * (K1 + 1.0)) / norm
    return score


def decay_factor(entry_date: Date, as_of: Date, decay_lambda: float) -> float:
    age_days = max(0, (as_of - entry_date).days)
    return math.exp(-decay_lambda * age_days)


def search(
    shard: IndexShard,
    corpus_entries: list[ExperientialEntry],
    query: SearchQuery,
    decay_lambda: float = 0.01,
) -> list[SearchHit]:
    """Decay-weighted, tag-filtered BM25 search.

    Tag and date filters narrow the candidate set before scoring;
    corpus-level statistics (N, df, average length) come from the whole
    shard. With a non-empty query only matching entries are returned;
    with an empty query the filters alone select, ranked by recency.
    """
    as_of = query.as_of or max((e.date for e in corpus_entries), default=Date.today())
    query_tokens = tokenize(query.text)

    candidates = []
    for entry in corpus_entries:
        tags = set(entry.tags)
        if query.required_tags and not query.required_tags.issubset(tags):
            continue
        if query.excluded_tags and query.excluded_tags & tags:
            continue
        if query.date_from and entry.date < query.date_from:
            continue
        if query.date_to and entry.date > query.date_to:
            continue
        candidates.append(entry)

    hits = []
    for entry in candidates:
        lexical = bm25_score(shard, query_tokens, entry.id) if query_tokens else 0.0
        if query_tokens and lexical <= 0.0:
            continue
        decay = decay_factor(entry.date, as_of, decay_lambda)
        hits.append(
            SearchHit(
                entry_id=entry.id,
                lexical_score=lexical,
                decay_factor=decay,
                final_score=lexical * decay,
                snippet=_snippet(entry.body),
            )
        )

    hits.sort(key=lambda h: (-h.final_score, -_date_ordinal(h.entry_id), h.entry_id))
    return hits[: max(1, query.limit)]


def _date_ordinal(entry_id: str) -> int:
    return Date.fromisoformat(entry_id.partition("#")[0]).toordinal()


def load_shard(root: Path) -> IndexShard | None:
    path = Path(root) / INDEX_FILE
    if not path.is_file():
        return None
    try:
        return IndexShard.from_doc(json.loads(path.read_text("utf-8")))
    except (ValueError, KeyError, OSError):
        return None


def save_shard(root: Path, shard: IndexShard) -> None:
    path = Path(root) / INDEX_FILE
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(canonical_json(shard.to_doc()), "utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write index: {exc}") from exc


def shard_for_state(state: KnowledgeState, persist: bool = True) -> IndexShard:
    """Load the cached shard if consistent with the corpus, else rebuild."""
    root = state.root
    shard = load_shard(root) if root else None
    if shard is not None and _consistent(shard, state):
        return shard
    shard = rebuild_index(state)
    if persist and root is not None:
        save_shard(root, shard)
    return shard


def _consistent(shard: IndexShard, state: KnowledgeState) -> bool:
    entries = state.corpus.entries
    if len(entries) != shard.doc_count:
        return False
    for entry in entries:
        if shard.content_hashes.get(entry.id) != content_hash(entry.body):
            return False
    return True
