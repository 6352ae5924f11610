"""Gateway log ingestion: JSONL records -> validated, sessionized execution paths."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Union

from .errors import DuplicateSeq, MalformedRecord

REQUIRED_KEYS = ("session_id", "seq", "tool_name", "query_params", "mcp_response")
KNOWN_KEYS = REQUIRED_KEYS + ("timestamp",)


@dataclass(frozen=True)
class ToolCall:
    session_id: str
    seq: int
    tool_name: str
    query_params: dict = field(default_factory=dict)
    mcp_response: dict = field(default_factory=dict)
    timestamp: int | None = None
    # unknown record fields, carried through to reports untouched
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = dict(self.extra)
        rec.update(
            session_id=self.session_id,
            seq=self.seq,
            tool_name=self.tool_name,
            query_params=self.query_params,
            mcp_response=self.mcp_response,
        )
        if self.timestamp is not None:
            rec["timestamp"] = self.timestamp
        return rec


@dataclass(frozen=True)
class ExecutionPath:
    session_id: str
    calls: tuple[ToolCall, ...]

    def __post_init__(self):
        if not self.calls:
            raise ValueError("execution path must be non-empty")
        seqs = [c.seq for c in self.calls]
        if any(b <= a for a, b in zip(seqs, seqs[1:])):
            raise ValueError(f"session {self.session_id!r}: seq not strictly increasing")
        if any(c.session_id != self.session_id for c in self.calls):
            raise ValueError(f"session {self.session_id!r}: foreign call in path")

    @property
    def tools(self) -> tuple[str, ...]:
        return tuple(c.tool_name for c in self.calls)

    def __len__(self) -> int:
        return len(self.calls)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def record_to_call(rec: Any, line: int = 0) -> ToolCall:
    """Validate one decoded record. Raises MalformedRecord."""
    if not isinstance(rec, dict):
        raise MalformedRecord(line, "record is not an object")
    for key in REQUIRED_KEYS:
        if key not in rec:
            raise MalformedRecord(line, f"missing {key}")
    sid, seq, tool = rec["session_id"], rec["seq"], rec["tool_name"]
    if not isinstance(sid, str):
        raise MalformedRecord(line, "session_id must be a string")
    if not _is_int(seq) or seq < 0:
        raise MalformedRecord(line, "seq must be a non-negative integer")
    if not isinstance(tool, str) or not tool:
        raise MalformedRecord(line, "tool_name must be a non-empty string")
    for key in ("query_params", "mcp_response"):
        if not isinstance(rec[key], dict):
            raise MalformedRecord(line, f"{key} must be an object")
    ts = rec.get("timestamp")
    if ts is not None and not _is_int(ts):
        raise MalformedRecord(line, "timestamp must be an integer")
    extra = {k: v for k, v in rec.items() if k not in KNOWN_KEYS}
    return ToolCall(sid, seq, tool, rec["query_params"], rec["mcp_response"], ts, extra)


def serialize_call(call: ToolCall) -> str:
    return json.dumps(call.to_record(), ensure_ascii=False, sort_keys=True)


def write_log(calls: Iterable[ToolCall], fh: IO[str]) -> None:
    for call in calls:
        fh.write(serialize_call(call))
        fh.write("\n")


Source = Union[bytes, str, IO[bytes], IO[str]]


def _lines(stream: Source) -> Iterable[str]:
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw


def parse_log(stream: Source) -> tuple[list[ToolCall], list[MalformedRecord]]:
    """Parse a newline-delimited trace stream.

    Returns ``(calls, diagnostics)``. Every non-blank line either becomes a
    ToolCall or contributes one MalformedRecord to the diagnostics, so nothing
    is dropped silently. I/O and decoding failures of the stream itself
    propagate.
    """
    calls: list[ToolCall] = []
    diagnostics: list[MalformedRecord] = []
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(MalformedRecord(lineno, f"invalid JSON: {exc.msg}"))
            continue
        try:
            calls.append(record_to_call(rec, lineno))
        except MalformedRecord as exc:
            diagnostics.append(exc)
    return calls, diagnostics


def sessionize(calls: Iterable[ToolCall]) -> tuple[list[ExecutionPath], list[DuplicateSeq]]:
    """Group calls into one path per session, ordered by seq.

    Sessions with a repeated seq are rejected whole; the returned diagnostics
    carry one DuplicateSeq per rejected session.
    """
    groups: dict[str, list[ToolCall]] = {}
    for call in calls:
        groups.setdefault(call.session_id, []).append(call)

    paths: list[ExecutionPath] = []
    rejected: list[DuplicateSeq] = []
    for sid, group in groups.items():
        group = sorted(group, key=lambda c: c.seq)
        dup = next((a.seq for a, b in zip(group, group[1:]) if a.seq == b.seq), None)
        if dup is not None:
            err = DuplicateSeq(sid, dup)
            err.calls = group
            rejected.append(err)
            continue
        paths.append(ExecutionPath(sid, tuple(group)))
    return paths, rejected


def load_paths(stream: Source) -> tuple[list[ExecutionPath], list[Exception]]:
    calls, diags = parse_log(stream)
    paths, rejected = sessionize(calls)
    return paths, [*diags, *rejected]
