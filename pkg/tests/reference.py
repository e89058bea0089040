"""Independent reference implementations used as test oracles.

Deliberately written without importing the package under test: the
tokenizer, BM25, cosine/component extraction and the workspace scans
are restated here from their contracts, so agreement is evidence, not
tautology.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from datetime import date as Date
from pathlib import Path

K1 = 1.2
B = 0.75

_TOKEN = re.compile(r"[a-z0-9]+")
_ENTRY = re.compile(r"^- (?:(\d{2}:\d{2}) )?((?:\[[A-Z][A-Z0-9-]*\])+) (.+)$")
_TAG = re.compile(r"\[([A-Z][A-Z0-9-]*)\]")
_META = re.compile(r"^<!-- nfd:section ([^>]*) -->$")


def ref_tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= 2]


def ref_bm25(docs: dict[str, str], query: str) -> dict[str, float]:
    """Per-document BM25 scores computed directly from the formula."""
    tokens = {doc_id: ref_tokenize(text) for doc_id, text in docs.items()}
    n = len(docs)
    if n == 0:
        return {}
    avgdl = sum(len(t) for t in tokens.values()) / n
    scores: dict[str, float] = {}
    for doc_id, doc_tokens in tokens.items():
        score = 0.0
        for term in ref_tokenize(query):
            tf = doc_tokens.count(term)
            if tf == 0:
                continue
            df = sum(1 for other in tokens.values() if term in other)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            score += idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * len(doc_tokens) / avgdl))
        scores[doc_id] = score
    return scores


def ref_decay(age_days: int, decay_lambda: float) -> float:
    return math.exp(-decay_lambda * max(0, age_days))


def ref_cosine(a: str, b: str) -> float:
    ca, cb = Counter(ref_tokenize(a)), Counter(ref_tokenize(b))
    dot = sum(count * cb[term] for term, count in ca.items())
    if dot == 0:
        return 0.0
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    return dot / (na * nb)


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def ref_extract(
    entries: list[tuple[str, list[str], str]],
    min_support: int,
    threshold: float,
) -> set[tuple]:
    """Exhaustive component enumeration over the pairwise-similarity graph.

    Entries are (id, tags, body). Returns a set of
    (signature, support_ids, rounded score, weak) tuples for comparison
    with the engine's extractor.
    """
    groups: dict[tuple[str, ...], list[tuple[str, str]]] = {}
    for entry_id, tags, body in entries:
        groups.setdefault(tuple(sorted(set(tags))), []).append((entry_id, body))

    out: set[tuple] = set()
    for signature, members in groups.items():
        members = sorted(members)
        ids = [m[0] for m in members]
        bodies = dict(members)
        sims = {}
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                sims[(a, b)] = sims[(b, a)] = ref_cosine(bodies[a], bodies[b])

        uf = _UnionFind(ids)
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if sims[(a, b)] >= threshold:
                    uf.union(a, b)
        components: dict[str, list[str]] = {}
        for entry_id in ids:
            components.setdefault(uf.find(entry_id), []).append(entry_id)

        def mean_pairwise(subset: list[str]) -> float:
            if len(subset) < 2:
                return 1.0
            pairs = [sims[(a, b)] for i, a in enumerate(subset) for b in subset[i + 1:]]
            return sum(pairs) / len(pairs)

        for component in components.values():
            component = sorted(component)
            if len(component) < min_support:
                continue
            score = len(component) * mean_pairwise(component)
            if score <= 0:
                continue
            out.add((signature, tuple(component), round(score, 9), False))

        if len(ids) >= max(2, min_support) and mean_pairwise(ids) < threshold:
            out.add(
                (signature, tuple(ids), round(len(ids) * threshold / 2.0, 9), True)
            )
    return out


def scan_entries(root: Path) -> list[tuple[Date, list[str], str]]:
    """Brute-force reparse of the daily logs: (date, tags, first body line)."""
    out = []
    memory = Path(root) / "memory"
    if not memory.is_dir():
        return out
    for path in sorted(memory.glob("*.md")):
        if not re.match(r"^\d{4}-\d{2}-\d{2}\.md$", path.name):
            continue
        day = Date.fromisoformat(path.stem)
        for line in path.read_text("utf-8").split("\n"):
            m = _ENTRY.match(line)
            if m:
                out.append((day, _TAG.findall(m.group(2)), m.group(3)))
    return out


def scan_sections(root: Path) -> list[dict]:
    """Brute-force scan of every reference file's crystallized sections."""
    sections = []
    skills_dir = Path(root) / "skills"
    if not skills_dir.is_dir():
        return sections
    for ref in sorted(skills_dir.glob("*/references/*")):
        if not ref.is_file():
            continue
        current: dict | None = None
        bucket = None
        for line in ref.read_text("utf-8").split("\n"):
            if line.startswith("## ") and not line.startswith("###"):
                current = {
                    "file": str(ref),
                    "validated": False,
                    "category": None,
                    "examples": 0,
                    "conditions": [],
                    "provenance": 0,
                }
                sections.append(current)
                bucket = None
                continue
            if current is None:
                continue
            meta = _META.match(line)
            if meta:
                pairs = dict(p.partition("=")[::2] for p in meta.group(1).split())
                current["validated"] = pairs.get("validated") == "true"
                current["category"] = pairs.get("category")
                continue
            if line.startswith("### "):
                name = line[4:].strip().lower()
                bucket = name if name in ("conditions", "examples", "provenance") else None
                continue
            if bucket and line.startswith("- "):
                if bucket == "examples":
                    current["examples"] += 1
                elif bucket == "provenance":
                    current["provenance"] += 1
                else:
                    current["conditions"].append(line[2:])
    return sections


def scan_structure_raw(root: Path, min_support: int) -> float:
    """Reference recomputation of the raw structure score from the files."""
    total = 0.0
    for section in scan_sections(root):
        has_conditions = any(c != "(unspecified)" for c in section["conditions"])
        total += (
            0.4 * section["validated"]
            + 0.2 * (section["examples"] > 0)
            + 0.2 * (section["provenance"] >= min_support)
            + 0.2 * has_conditions
        )
    return total


def scan_progression(root: Path, window_from: Date | None, window_to: Date | None) -> dict:
    """Reference progression counts straight from the files."""
    entries = scan_entries(root)

    def in_window(day: Date) -> bool:
        if window_from and day < window_from:
            return False
        if window_to and day > window_to:
            return False
        return True

    windowed = [(d, tags) for d, tags, _ in entries if in_window(d)]
    populated_files = set()
    error_sections = 0
    for section in scan_sections(root):
        populated_files.add(section["file"])
        if section["validated"] and section["category"] == "ErrorRecord":
            error_sections += 1
    return {
        "daily_log_entries": len(windowed),
        "case_recalls": sum(1 for _, tags in windowed if "RECALL" in tags),
        "bias_flags": sum(1 for _, tags in windowed if "BIAS-FLAG" in tags),
        "skill_refs_populated": len(populated_files),
        "error_patterns": error_sections,
    }


def tree_bytes(root: Path) -> dict[str, bytes]:
    root = Path(root)
    return {
        str(path.relative_to(root)): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }
