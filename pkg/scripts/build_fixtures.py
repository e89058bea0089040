#!/usr/bin/env python3
"""Regenerate the golden workspace fixtures under tests/fixtures/.

The fixtures are written as plain literal text (no engine imports) so
they stand on their own as the reference for the canonical on-disk
format. tests/test_fixtures.py re-runs this builder and diffs it
against the checked-in trees to catch drift.

Usage: python3 scripts/build_fixtures.py [--out tests/fixtures]
"""

from __future__ import annotations

import argparse
import json
import shutil
from pathlib import Path

# ---------------------------------------------------------------- helpers


def canonical_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write(root: Path, rel: str, text: str) -> None:
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, "utf-8")


def entry_line(time: str | None, tags: list[str], body: str) -> str:
    head = "- "
    if time:
        head += f"{time} "
    head += "".join(f"[{t}]" for t in tags) + " "
    lines = body.split("\n")
    out = [head + lines[0]]
    out.extend("  " + line for line in lines[1:])
    return "\n".join(out) + "\n"


def daily_log(entries: list[tuple]) -> str:
    return "".join(entry_line(t, tags, body) for t, tags, body in entries)


def config_doc(lifecycle: str, **overrides) -> dict:
    doc = {
        "alpha": 1 / 3,
        "beta": 1 / 3,
        "gamma": 1 / 3,
        "constitutional_budget_tokens": 2000,
        "min_support": 3,
        "similarity_threshold": 0.35,
        "decay_lambda": 0.01,
        "n_sat": 500,
        "s_sat": 20,
        "threshold_trigger": 50,
        "schedule": "manual",
        "lifecycle_phase": lifecycle,
    }
    doc.update(overrides)
    return doc


def section(
    heading: str,
    body: str,
    examples: list[str],
    provenance: list[str],
    batch: str,
    category: str,
    conditions: list[str] | None = None,
    decontextualized: bool = False,
) -> str:
    parts = [f"## {heading}", "", body, "", "### Conditions", ""]
    parts += [f"- {c}" for c in (conditions or ["(unspecified)"])]
    parts.append("")
    if examples:
        parts += ["### Examples", ""]
        parts += [f"- {e}" for e in examples]
        parts.append("")
    parts += ["### Provenance", ""]
    parts += [f"- {p}" for p in provenance]
    parts.append("")
    parts.append(
        f"<!-- nfd:section batch={batch} category={category} "
        f"decontextualized={'true' if decontextualized else 'false'} validated=true -->"
    )
    return "\n".join(parts) + "\n"


# ------------------------------------------------------------ mini-analyst

MINI_DAYS = {
    "2025-01-06": [
        ("09:05", ["DECISION"], "Decided to run the semis earnings screen before the open"),
        ("10:12", ["ERROR", "SECTOR-SPECIFIC"],
         "Applied revenue growth weighting to a capex heavy semiconductor name and called it a strong buy"),
        (None, ["CONTEXT", "MACRO"], "Rates held steady; market breadth narrow into the print window"),
        ("13:40", ["REASONING"],
         "Trimmed the position because implied volatility was rich relative to realized ahead of guidance"),
        (None, ["PATTERN", "GUIDANCE"],
         "Every time management swaps specific guidance for qualitative language, the next quarter tends to follow weak"),
        ("16:01", ["INSIGHT", "STRATEGY", "BINARY-EVENT"],
         "For binary events the edge is in the decay rate of uncertainty, position before the inflection point"),
    ],
    "2025-01-07": [
        ("08:55", ["DECISION"], "Decided to keep the energy underweight through the inventory report"),
        (None, ["RECALL", "CASE"], "Recalled the 2024 capex misread when reviewing the foundry model"),
        ("11:20", ["ERROR", "SECTOR-SPECIFIC"],
         "Applied revenue growth weighting to another capex heavy name while free cash flow stays compressed"),
        (None, ["CONTEXT"], "Earnings season week two, reporting density highest on Thursday"),
        ("14:45", ["REASONING"],
         "Held the hedge because breadth divergence usually resolves down, my reasoning follows the 2023 analog"),
        ("15:30", ["ERROR", "TIMING"], "Sold the hedge two weeks before the catalyst, timing was wrong"),
    ],
    "2025-01-08": [
        ("09:10", ["OPERATIONAL"], "Ran the sector comparison sheet for industrials and posted the summary"),
        (None, ["PATTERN", "GUIDANCE"],
         "Hedging language in the prepared remarks tends to follow with a guide-down next quarter"),
        ("10:40", ["INSIGHT", "STRATEGY", "BINARY-EVENT"],
         "Binary event positioning works when the market reprices uncertainty slowly, the decay rate of uncertainty is the edge"),
        (None, ["ERROR", "SECTOR-SPECIFIC"],
         "Revenue growth weighting again misled on a capex heavy name, should weight free cash flow yield instead"),
        ("13:15", ["CONTEXT", "MACRO"], "Dollar strength weighing on translated revenue for multinationals"),
        (None, ["DECISION"], "I'll go with the staggered entry plan for the refiner position"),
    ],
    "2025-01-09": [
        ("08:45", ["REASONING"],
         "Kept the quality screen strict because drawdowns cluster in the lowest cash conversion cohort"),
        (None, ["INSIGHT"], "I've realized that conference tone shifts lead the printed guidance revisions"),
        ("11:05", ["OPERATIONAL"], "Updated the watchlist and archived the stale tickers"),
        ("14:20", ["ERROR", "TIMING"], "Entered the position after the upgrade cycle had mostly played out"),
        (None, ["PATTERN", "FLOWS"], "Quarter end rebalancing flows tend to follow the first trading day with a reversal"),
        ("15:55", ["RECALL", "CASE"], "Recalled the biotech readout case when sizing the event book"),
    ],
    "2025-01-10": [
        ("09:00", ["DECISION"], "Decided to cap single name event risk at two percent of book"),
        ("10:30", ["ERROR", "SECTOR-SPECIFIC"],
         "Weighted revenue growth over free cash flow for a capex heavy name and overrated the upside"),
        (None, ["CONTEXT"], "Fed speakers quiet period begins Friday"),
        ("13:00", ["INSIGHT", "STRATEGY", "BINARY-EVENT"],
         "Watch the decay rate of uncertainty into binary events and be positioned before the inflection"),
        (None, ["REASONING"],
         "Passed on the secondary because the use of proceeds smelled like plugging working capital"),
        ("16:10", ["OPERATIONAL"], "Closed the books and reconciled fills against the blotter"),
    ],
    "2025-01-11": [
        (None, ["PATTERN", "GUIDANCE"], "Specificity dropping from forward statements precedes negative revisions"),
        ("09:25", ["OPERATIONAL"], "Dry run of the earnings call notes template for next week"),
        ("11:45", ["ERROR"], "Mixed up fiscal and calendar quarters in the comp table"),
        (None, ["CONTEXT", "MACRO"], "Crude term structure flipped to contango overnight"),
        ("14:05", ["INSIGHT"],
         "The key thing about sector rotation is that leadership changes at the index level lag the factor level"),
        (None, ["BIAS-FLAG"], "Flagged anchoring on the prior price target during the review"),
    ],
    "2025-01-12": [
        ("09:15", ["DECISION"], "Decided to move the stop on the refiner to breakeven"),
        (None, ["ERROR"], "Ignored the share count change when rolling forward the model"),
        ("10:50", ["REASONING"], "Scaled in slowly because liquidity in the name dries up after the open"),
        (None, ["OPERATIONAL", "NOTES"], "Weekly wrap:\ncoverage list steady, two names on deck for deep dives"),
        ("13:35", ["PATTERN"], "Sell side upgrades cluster after the move tends to follow exhaustion"),
        ("15:45", ["CONTEXT"], "Holiday-shortened week next week, desk coverage thin"),
    ],
}

MINI_SOUL = """# Soul

A rigorous, skeptical equity research partner. Evidence first, narrative second.

Grown through use. Edit deliberately.
"""

MINI_AGENTS = """# Operating Rules

- Log decisions, errors, insights, and observed patterns as they happen.
- Apply the sector weighting checks before any factor-based call.
- Keep this layer short: principles and pointers, not reference detail.
"""

MINI_USER = """# User

Covers US equities, generalist with a semis and energy tilt.
Prefers cash-flow framing over growth narratives.
"""

MINI_MEMORY = """# Memory

## Principles

- [confirmed] (p-0001) Weight free cash flow over revenue growth for capex intensive sectors. <!-- sources: user -->
- [proposed] (p-0002) Position ahead of the uncertainty inflection for binary events.
"""


def build_mini_analyst(root: Path) -> None:
    write(root, "SOUL.md", MINI_SOUL)
    write(root, "AGENTS.md", MINI_AGENTS)
    write(root, "USER.md", MINI_USER)
    write(root, "MEMORY.md", MINI_MEMORY)
    write(root, "nfd.json", canonical_json(config_doc("initial-nurturing")))
    for day, entries in MINI_DAYS.items():
        write(root, f"memory/{day}.md", daily_log(entries))

    write(root, "skills/earnings-analysis/SKILL.md",
          "# earnings-analysis\n\nWalk the release, the deck, and the call transcript in that order.\n")
    write(root, "skills/earnings-analysis/references/guidance-language.md",
          "Notes on guidance phrasing worth watching: specificity, hedging, omission.\n")
    write(root, "skills/market-data/SKILL.md",
          "# market-data\n\nPull quotes, fundamentals, and estimate revisions for a ticker list.\n")
    write(root, "skills/sector-compare/SKILL.md",
          "# sector-compare\n\nCompare a name against its sector cohort on the standard factor sheet.\n")
    for sub in ("crystal/pending", "crystal/decisions", "crystal/history"):
        (root / sub).mkdir(parents=True, exist_ok=True)


# ------------------------------------------------------------- case-study
# Shaped to a matured deployment: 8 populated reference files, 12
# validated error-pattern sections, a three-week window of daily logging.

CS_WINDOW_BODIES = [
    "Opened the week reviewing the macro calendar and setting alert levels",
    "Walked the semis pre-announcements and updated the estimate bridge",
    "Recalled the foundry capex case while reviewing the new fab guidance",
    "Noted hedging language creeping into the industrial bellwether call",
    "Trimmed the quality screen after two names flipped cash conversion",
    "Flagged anchoring risk on the legacy price target in the review",
    "Sunday deep dive on the refiner crack spread model",
    "Compared insurer combined ratios across the coastal exposure cohort",
    "Recalled the 2023 breadth divergence analog during the rally",
    "Logged the payer mix shift flagged on the hospital operator call",
    "Rebuilt the event book sizing sheet with the two percent cap",
    "Dry ran the earnings template for the heavy reporting week",
    "Noted specificity dropping from the network equipment guide",
    "Recalled the biotech readout case while sizing the event position",
    "Checked the dollar drag math on the multinational revenue lines",
    "Flagged confirmation bias in the bull case review of the platform name",
    "Mapped the upgrade cycle stage for the handset supply chain",
    "Closed the loop on the working capital red flag from the secondary",
    "Recalled the contango flip case when the curve moved overnight",
    "Summarized the week: two theses strengthened, one stopped out",
    "Prepared the month-end factor exposure recap for the book",
]

CS_WINDOW_TAGS = {
    2: ["RECALL", "CASE"],
    3: ["PATTERN", "GUIDANCE"],
    5: ["BIAS-FLAG"],
    8: ["RECALL", "CASE"],
    13: ["RECALL", "CASE"],
    15: ["BIAS-FLAG"],
    18: ["RECALL", "CASE"],
}

CS_JANUARY = [
    ("2025-01-15", ["ERROR", "SECTOR-SPECIFIC"],
     "Applied uniform factor weights to a capex heavy name and missed the cash flow squeeze"),
    ("2025-01-15", ["ERROR", "SECTOR-SPECIFIC"],
     "Sector blind weighting overstated the growth story on the utility capex program"),
    ("2025-01-16", ["ERROR", "SECTOR-SPECIFIC"],
     "Missed the sector adjustment again, revenue weighting flattered the telecom build-out"),
    ("2025-01-16", ["ERROR", "TIMING"],
     "Exited the hedge a week early, the catalyst landed on schedule"),
    ("2025-01-17", ["ERROR", "TIMING"],
     "Chased the breakout after the upgrade cycle was already priced"),
    ("2025-01-17", ["ERROR", "TIMING"],
     "Rolled the protection too late into the print window"),
    ("2025-01-20", ["ERROR", "NARRATIVE"],
     "Took the turnaround narrative at face value without checking segment margins"),
    ("2025-01-20", ["ERROR", "NARRATIVE"],
     "Let the activist story carry the thesis past the balance sheet warnings"),
    ("2025-01-21", ["ERROR", "MODEL"],
     "Mixed fiscal and calendar quarters in the comp sheet again"),
    ("2025-01-21", ["ERROR", "MODEL"],
     "Ignored the buyback share count change when rolling the model forward"),
]

CS_SOUL = """# Soul

A rigorous, evidence-first equity research partner in mature operation.

Grown through use. Edit deliberately.
"""

CS_AGENTS = """# Operating Rules

- Sector-conditional weighting before any factor call.
- Binary events: size from the uncertainty decay framework reference.
- Log recalls and bias flags explicitly; they are progression signals.
"""

CS_USER = """# User

US equities generalist; five-plus years covering semis, energy, healthcare.
Wants recalled precedents surfaced proactively during analysis.
"""

CS_MEMORY = """# Memory

Index: error pattern library under skills/error-patterns, frameworks under
skills/sector-analysis and skills/earnings-analysis.

## Principles

- [confirmed] (p-0001) Weight free cash flow over revenue growth for capex intensive sectors. <!-- sources: 2025-01-15#0001, 2025-01-15#0002, 2025-01-16#0001 -->
- [confirmed] (p-0002) Never carry a narrative past the balance sheet check. <!-- sources: 2025-01-20#0001, 2025-01-20#0002 -->
- [confirmed] (p-0003) Size binary event positions from the uncertainty decay rate, not the headline odds. <!-- sources: user -->
- [confirmed] (p-0004) Recall the closest historical case before finalizing any recommendation. <!-- sources: user -->
"""


def _cs_error_sections(filename_stem: str, tag: str, bodies: list[str], provenance: list[str], batch: str) -> str:
    blocks = []
    for i, body in enumerate(bodies):
        blocks.append(
            section(
                heading=f"[ERROR][{tag}]",
                body=body,
                examples=[f"{p}: see daily log" for p in provenance[:2]],
                provenance=provenance,
                batch=batch,
                category="ErrorRecord",
                conditions=None if i % 2 else ["factor screen produced the initial call"],
                decontextualized=bool(i % 2),
            )
        )
    return "\n".join(blocks)


def build_case_study(root: Path) -> None:
    write(root, "SOUL.md", CS_SOUL)
    write(root, "AGENTS.md", CS_AGENTS)
    write(root, "USER.md", CS_USER)
    write(root, "MEMORY.md", CS_MEMORY)
    write(root, "nfd.json", canonical_json(config_doc("structured-nurturing")))

    for day, tags, body in CS_JANUARY:
        path = root / "memory" / f"{day}.md"
        existing = path.read_text("utf-8") if path.exists() else ""
        write(root, f"memory/{day}.md", existing + entry_line(None, tags, body))

    for offset, body in enumerate(CS_WINDOW_BODIES):
        day = f"2025-02-{3 + offset:02d}"
        tags = CS_WINDOW_TAGS.get(offset, ["OPERATIONAL"])
        write(root, f"memory/{day}.md", entry_line("09:00", tags, body))

    prov = {
        "sector": ["2025-01-15#0001", "2025-01-15#0002", "2025-01-16#0001"],
        "timing": ["2025-01-16#0002", "2025-01-17#0001", "2025-01-17#0002"],
        "narrative": ["2025-01-20#0001", "2025-01-20#0002", "2025-01-15#0001"],
        "model": ["2025-01-21#0001", "2025-01-21#0002", "2025-01-16#0002"],
    }

    write(root, "skills/error-patterns/SKILL.md",
          "# error-patterns\n\nCheck the library before finalizing any call; add new patterns via review.\n")
    write(root, "skills/error-patterns/references/sector-blind.md",
          _cs_error_sections("sector-blind", "SECTOR-SPECIFIC", [
              "Uniform factor weights applied across sectors flatter capex heavy names.",
              "Growth narratives on build-out programs need the cash flow squeeze check.",
              "Sector adjustment is mandatory before comparing factor scores across groups.",
          ], prov["sector"], "CC-20250301-1"))
    write(root, "skills/error-patterns/references/timing.md",
          _cs_error_sections("timing", "TIMING", [
              "Hedges get lifted too early when the catalyst date is known.",
              "Entries after the upgrade cycle has run tend to buy exhaustion.",
              "Protection rolled inside the print window costs multiples of planned spend.",
          ], prov["timing"], "CC-20250301-1"))
    write(root, "skills/error-patterns/references/narrative.md",
          _cs_error_sections("narrative", "NARRATIVE", [
              "Turnaround stories must clear segment margin evidence before sizing.",
              "Activist involvement is a catalyst, not a thesis.",
              "Narrative momentum fades at the first balance sheet contradiction.",
          ], prov["narrative"], "CC-20250302-1"))
    write(root, "skills/error-patterns/references/model-mechanics.md",
          _cs_error_sections("model-mechanics", "MODEL", [
              "Fiscal versus calendar quarter mismatches recur in the comp sheets.",
              "Share count changes from buybacks must roll into forward estimates.",
              "Model hygiene failures cluster during heavy reporting weeks.",
          ], prov["model"], "CC-20250302-1"))
    write(root, "skills/error-patterns/asset.json", canonical_json({
        "name": "error-patterns",
        "provenance": sorted(set(prov["sector"] + prov["timing"] + prov["narrative"] + prov["model"])),
        "versions": [],
    }))

    write(root, "skills/earnings-analysis/SKILL.md",
          "# earnings-analysis\n\nRelease, deck, transcript, in that order; log guidance language shifts.\n")
    write(root, "skills/earnings-analysis/references/guidance-language.md",
          section("[PATTERN][GUIDANCE]",
                  "Specificity loss and hedging language in guidance precede negative revisions.",
                  ["2025-01-15#0001: see daily log"],
                  prov["sector"], "CC-20250301-1", "PatternObservation",
                  conditions=["management changed the guidance format"]))
    write(root, "skills/earnings-analysis/references/narrative-drift.md",
          section("[PATTERN][NARRATIVE-DRIFT]",
                  "Track how management framing of the same issue moves across quarters; drift is signal.",
                  ["2025-01-20#0001: see daily log"],
                  prov["narrative"], "CC-20250302-1", "PatternObservation"))
    write(root, "skills/earnings-analysis/asset.json", canonical_json({
        "name": "earnings-analysis",
        "provenance": sorted(set(prov["sector"] + prov["narrative"])),
        "versions": [],
    }))

    write(root, "skills/sector-analysis/SKILL.md",
          "# sector-analysis\n\nApply sector-conditional factor weights before cross-group comparisons.\n")
    write(root, "skills/sector-analysis/references/capex-cycles.md",
          section("[REASONING][CAPEX]",
                  "High capex today compresses free cash flow for years; weight FCF yield up in capex heavy sectors.",
                  ["2025-01-15#0002: see daily log"],
                  prov["sector"], "CC-20250301-1", "ReasoningTrace",
                  conditions=["name sits in a capex intensive sector"]))
    write(root, "skills/sector-analysis/references/factor-weights.md",
          section("[REASONING][FACTOR-WEIGHTS]",
                  "Factor weights shift with the macro regime; re-derive them at each regime change.",
                  ["2025-01-16#0001: see daily log"],
                  prov["model"], "CC-20250302-1", "ReasoningTrace"))
    write(root, "skills/sector-analysis/asset.json", canonical_json({
        "name": "sector-analysis",
        "provenance": sorted(set(prov["sector"] + prov["model"])),
        "versions": [],
    }))

    for sub in ("crystal/pending", "crystal/decisions", "crystal/history"):
        (root / sub).mkdir(parents=True, exist_ok=True)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/fixtures", type=Path)
    args = parser.parse_args()
    for name, builder in (("mini_analyst", build_mini_analyst), ("case_study", build_case_study)):
        target = args.out / name
        if target.exists():
            shutil.rmtree(target)
        builder(target)
        files = sum(1 for p in target.rglob("*") if p.is_file())
        print(f"{name}: {files} files -> {target}")


if __name__ == "__main__":
    main()
