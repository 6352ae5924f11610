"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TraceHoundError(Exception):
    """Base class for all package errors."""


class MalformedRecord(TraceHoundError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateSeq(TraceHoundError):
    def __init__(self, session_id: str, seq: int):
        super().__init__(f"session {session_id!r}: duplicate seq {seq}")
        self.session_id = session_id
        self.seq = seq


class EmptyCorpus(TraceHoundError):
    pass


class UnknownTool(TraceHoundError):
    def __init__(self, tool_name: str):
        super().__init__(f"tool {tool_name!r} has no level")
        self.tool_name = tool_name


class ArityMismatch(TraceHoundError):
    pass


class SchemaVersionMismatch(TraceHoundError):
    pass


class JudgeFailure(TraceHoundError):
    """Raised when a judge cannot produce a decision for a unit."""

    def __init__(self, message: str, unit: tuple[str, ...] | None = None):
        super().__init__(message if unit is None else f"{message} (unit {' -> '.join(unit)})")
        self.unit = unit


class RemoteUnavailable(JudgeFailure):
    pass


class MalformedJudgeOutput(JudgeFailure):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class UnknownTemplate(TraceHoundError, KeyError):
    pass


class InvalidSpec(TraceHoundError):
    pass


class SessionMismatch(TraceHoundError):
    pass
