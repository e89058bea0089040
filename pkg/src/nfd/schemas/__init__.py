"""Shared wire-format schemas.

The decisions document is the one input the human gate accepts; the
CLI, the HTTP gateway and the review UI all validate against this same
schema so the three paths stay equivalent.
"""

from __future__ import annotations

import json
from pathlib import Path

_HERE = Path(__file__).parent

DECISIONS_SCHEMA: dict = json.loads((_HERE / "decisions.json").read_text("utf-8"))
