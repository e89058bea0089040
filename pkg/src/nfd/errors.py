"""Engine error types.

Every domain failure raises an NfdError subclass; the CLI maps these to
exit code 1 and the gateway maps them to 4xx responses. Anything else
escaping the engine is a bug.
"""

from __future__ import annotations


class NfdError(Exception):
    """Base class for all engine errors."""

    code = "engine_error"


class TargetNotEmpty(NfdError):
    code = "target_not_empty"


class NotAWorkspace(NfdError):
    code = "not_a_workspace"


class IoFailure(NfdError):
    code = "io_failure"


class ParseError(NfdError):
    """A structurally unreadable file (bad JSON, undecodable config)."""

    code = "parse_error"

    def __init__(self, file: str, line: int, reason: str):
        super().__init__(f"{file}:{line}: {reason}")
        self.file = file
        self.line = line
        self.reason = reason


class InvariantViolation(NfdError):
    code = "invariant_violation"


class LockHeld(NfdError):
    code = "lock_held"


class InvalidTag(NfdError):
    code = "invalid_tag"


class EmptyBody(NfdError):
    code = "empty_body"


class SourceMissing(NfdError):
    code = "source_missing"


class EmptyScope(NfdError):
    code = "empty_scope"


class OverlappingPendingBatch(NfdError):
    code = "overlapping_pending_batch"


class UnknownBatch(NfdError):
    code = "unknown_batch"


class BatchNotPending(NfdError):
    code = "batch_not_pending"


class BatchNotDecided(NfdError):
    code = "batch_not_decided"


class MissingDecision(NfdError):
    code = "missing_decision"

    def __init__(self, candidate_id: str):
        super().__init__(f"no decision for candidate {candidate_id}")
        self.candidate_id = candidate_id


class DecisionsInvalid(NfdError):
    """Decisions document failed schema or referential validation."""

    code = "decisions_invalid"


class UnknownTargetSkill(NfdError):
    code = "unknown_target_skill"


class ZeroConsumption(NfdError):
    code = "zero_consumption"
