"""Splitting execution paths into level-respecting execution units."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, TypeVar

from .errors import UnknownTool
from .hierarchy import LevelMap
from .ingest import ExecutionPath, ToolCall

T = TypeVar("T")

TypeSignature = tuple  # tuple[str, ...], the unit's tool-name sequence


@dataclass(frozen=True)
class ExecutionUnit:
    calls: tuple[ToolCall, ...]
    source_session: str

    @property
    def signature(self) -> tuple[str, ...]:
        return unit_type(self)

    def __len__(self) -> int:
        return len(self.calls)


@dataclass(frozen=True)
class InvalidPath:
    session_id: str
    reason: str
    position: int | None = None


def _levels(levels: LevelMap | Mapping[str, int]) -> Mapping[str, int]:
    return levels.levels if isinstance(levels, LevelMap) else levels


def _name(item) -> str:
    return item.tool_name if isinstance(item, ToolCall) else item


def expand_segment(seq: Sequence[T], levels: LevelMap | Mapping[str, int]) -> list[list[T]]:
    """Cartesian expansion over maximal same-level blocks.

    Works on ToolCalls or bare tool names. The result has one entry per
    choice of one element from each block, in block order.
    """
    lv = _levels(levels)
    for item in seq:
        if _name(item) not in lv:
            raise UnknownTool(_name(item))
    out: list[list[T]] = [[]]
    i = len(seq)
    # build from the back so each block prefixes the expanded suffix
    while i > 0:
        level = lv[_name(seq[i - 1])]
        k = i - 1
        while k > 0 and lv[_name(seq[k - 1])] == level:
            k -= 1
        out = [[b, *t] for b in seq[k:i] for t in out]
        i = k
    return out


def first_order_violation(tools: Sequence[str], lv: Mapping[str, int]) -> int | None:
    """Index of the first call whose level is above its predecessor's, else None."""
    for i in range(1, len(tools)):
        if lv[tools[i]] < lv[tools[i - 1]]:
            return i
    return None


def path_units(path: ExecutionPath, levels: LevelMap | Mapping[str, int]) -> list[ExecutionUnit]:
    return [ExecutionUnit(tuple(u), path.session_id)
            for u in expand_segment(path.calls, levels)]


def split_paths(paths: Sequence[ExecutionPath], levels: LevelMap | Mapping[str, int]
                ) -> tuple[list[ExecutionUnit], list[InvalidPath]]:
    lv = _levels(levels)
    units: list[ExecutionUnit] = []
    invalid: list[InvalidPath] = []
    for path in paths:
        tools = path.tools
        unknown = next((i for i, t in enumerate(tools) if t not in lv), None)
        if unknown is not None:
            invalid.append(InvalidPath(path.session_id, f"unknown tool {tools[unknown]}", unknown))
            continue
        bad = first_order_violation(tools, lv)
        if bad is not None:
            invalid.append(InvalidPath(
                path.session_id,
                f"{tools[bad - 1]} (L{lv[tools[bad - 1]] + 1}) invoked before "
                f"{tools[bad]} (L{lv[tools[bad]] + 1})", bad))
            continue
        units.extend(path_units(path, lv))
    return units, invalid


def unit_type(unit: ExecutionUnit | Sequence) -> tuple[str, ...]:
    calls = unit.calls if isinstance(unit, ExecutionUnit) else unit
    return tuple(_name(c) for c in calls)
