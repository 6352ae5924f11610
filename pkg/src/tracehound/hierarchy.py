"""Tool-level hierarchy recovery by queue-driven level propagation.

Levels are 0-based internally (0 = top of the hierarchy) and shown 1-based
in documents and reports.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, MutableMapping, Sequence

from .errors import EmptyCorpus

ToolSeq = Sequence[str]


@dataclass(frozen=True)
class LevelMap:
    levels: Mapping[str, int]

    def __getitem__(self, tool: str) -> int:
        return self.levels[tool]

    def __contains__(self, tool: object) -> bool:
        return tool in self.levels

    def __len__(self) -> int:
        return len(self.levels)

    def get(self, tool: str, default=None):
        return self.levels.get(tool, default)

    def display(self) -> dict[str, int]:
        return {tool: lvl + 1 for tool, lvl in sorted(self.levels.items())}

    def by_level(self) -> list[list[str]]:
        """Tools grouped per level, top level first."""
        if not self.levels:
            return []
        out: list[list[str]] = [[] for _ in range(max(self.levels.values()) + 1)]
        for tool, lvl in sorted(self.levels.items()):
            out[lvl].append(tool)
        return out

    @classmethod
    def from_display(cls, shown: Mapping[str, int]) -> "LevelMap":
        return cls({tool: int(lvl) - 1 for tool, lvl in shown.items()})


@dataclass(frozen=True)
class RelationSet:
    dominance: frozenset[tuple[str, str]]
    interchangeable: frozenset[frozenset[str]]

    def __or__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet(self.dominance | other.dominance,
                           self.interchangeable | other.interchangeable)

    def issuperset(self, other: "RelationSet") -> bool:
        return (self.dominance >= other.dominance
                and self.interchangeable >= other.interchangeable)


def tool_sequences(paths: Iterable) -> list[tuple[str, ...]]:
    """Accept ExecutionPaths or plain tool-name sequences."""
    out = []
    for p in paths:
        calls = getattr(p, "calls", None)
        out.append(tuple(c.tool_name for c in calls) if calls is not None else tuple(p))
    return out


def init_levels(paths) -> tuple[dict[str, int], dict[str, list[tuple[int, int]]]]:
    """Earliest position of each tool as its initial level, plus the occurrence index."""
    seqs = tool_sequences(paths)
    if not seqs or any(len(s) == 0 for s in seqs):
        raise EmptyCorpus("need at least one non-empty path")
    levels: dict[str, int] = {}
    occ: dict[str, list[tuple[int, int]]] = {}
    for i, seq in enumerate(seqs):
        for j, tool in enumerate(seq):
            occ.setdefault(tool, []).append((i, j))
            levels[tool] = min(levels.get(tool, j), j)
    return levels, occ


def _lower(levels: MutableMapping[str, int], tool: str, value: int, dropped: set[str]) -> None:
    if value < levels[tool]:
        levels[tool] = value
        dropped.add(tool)


def refresh_path_from_anchor(path: ToolSeq, anchor: int,
                             levels: MutableMapping[str, int]) -> set[str]:
    """Re-tighten one path around ``path[anchor]``; mutates ``levels``.

    Returns the tools whose level strictly decreased. All updates are
    min-updates, so no level ever rises.
    """
    dropped: set[str] = set()
    lvl = levels[path[anchor]]
    for tool in path[:anchor]:
        _lower(levels, tool, lvl, dropped)

    base = lvl
    start = anchor + 1
    for t in range(anchor + 1, len(path)):
        cur = levels[path[t]]
        if cur <= base:
            for tool in path[start:t + 1]:
                _lower(levels, tool, cur, dropped)
            base = cur
            start = t + 1
        else:
            _lower(levels, path[t], base + 1, dropped)
            base = levels[path[t]]
    return dropped


def propagate(paths, rng: random.Random | None = None) -> LevelMap:
    """Queue-driven level propagation to the global fixpoint.

    ``rng`` only randomizes the queue pop order; the result does not depend
    on it.
    """
    seqs = tool_sequences(paths)
    levels, occ = init_levels(seqs)

    queue: deque[str] = deque()
    queued: set[str] = set()

    def enqueue(tools: set[str]) -> None:
        for v in sorted(tools):
            if v not in queued:
                queue.append(v)
                queued.add(v)

    for seq in seqs:
        for j in range(len(seq)):
            enqueue(refresh_path_from_anchor(seq, j, levels))

    while queue:
        if rng is None:
            x = queue.popleft()
        else:
            idx = rng.randrange(len(queue))
            queue.rotate(-idx)
            x = queue.popleft()
            queue.rotate(idx)
        queued.discard(x)
        for i, j in occ[x]:
            enqueue(refresh_path_from_anchor(seqs[i], j, levels))
    return LevelMap(dict(levels))


def relations(paths, levels: LevelMap | Mapping[str, int]) -> RelationSet:
    """Dominance (adjacent, one level apart) and interchangeability (same level,
    both relative orders witnessed somewhere in the corpus)."""
    lv = levels.levels if isinstance(levels, LevelMap) else levels
    dominance: set[tuple[str, str]] = set()
    ordered: set[tuple[str, str]] = set()
    for seq in tool_sequences(paths):
        for a, b in zip(seq, seq[1:]):
            if lv[b] == lv[a] + 1:
                dominance.add((a, b))
        for i, a in enumerate(seq):
            for b in seq[i + 1:]:
                if a != b:
                    ordered.add((a, b))
    inter = {frozenset((a, b)) for a, b in ordered
             if (b, a) in ordered and lv[a] == lv[b]}
    return RelationSet(frozenset(dominance), frozenset(inter))
