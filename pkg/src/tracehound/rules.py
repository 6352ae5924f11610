"""Instance rule extraction, grouping by unit type, and rule summarization.

The pipeline here is judge-agnostic: anything with ``extract(unit)``,
``summarize(rules)`` and ``check(anchor, candidate)`` methods works, see
``tracehound.judge``.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

from .errors import ArityMismatch, EmptyCorpus, SchemaVersionMismatch, TraceHoundError
from .hierarchy import LevelMap, RelationSet, propagate, relations
from .ingest import ExecutionPath
from .units import ExecutionUnit, InvalidPath, split_paths, unit_type

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# one entry per call in the unit; None means "no condition" and matches anything
Conditions = tuple  # tuple[frozenset[str] | None, ...]


@dataclass(frozen=True)
class InstanceRule:
    behavior: str
    conditions: Conditions
    source_type: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.conditions)


@dataclass(frozen=True)
class GeneralizedRule:
    behavior: str
    conditions: Conditions
    type: tuple[str, ...]
    support: int = 1

    @property
    def arity(self) -> int:
        return len(self.conditions)

    @classmethod
    def from_instance(cls, rule: InstanceRule) -> "GeneralizedRule":
        return cls(rule.behavior, rule.conditions, rule.source_type, 1)


@dataclass
class BehaviorProfile:
    level_map: LevelMap
    known_types: frozenset
    rules: dict
    relations: RelationSet = field(default_factory=lambda: RelationSet(frozenset(), frozenset()))
    diagnostics: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_document(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "levels": self.level_map.display(),
            "hierarchy": self.level_map.by_level(),
            "relations": {
                "dominance": sorted(list(p) for p in self.relations.dominance),
                "interchangeable": sorted(sorted(p) for p in self.relations.interchangeable),
            },
            "known_types": sorted(list(t) for t in self.known_types),
            "rules": [_rule_doc(self.rules[t]) for t in sorted(self.rules)],
            "diagnostics": [
                {"session_id": d.session_id, "reason": d.reason, "position": d.position}
                for d in self.diagnostics
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_document(cls, doc: dict) -> "BehaviorProfile":
        version = doc.get("schema_version") if isinstance(doc, dict) else None
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"profile schema_version {version!r}, expected {SCHEMA_VERSION}")
        try:
            rules = {}
            for r in doc["rules"]:
                rule = GeneralizedRule(r["behavior"], conditions_from_doc(r["conditions"]),
                                       tuple(r["type"]), int(r["support"]))
                rules[rule.type] = rule
            rel = doc.get("relations", {})
            return cls(
                level_map=LevelMap.from_display(doc["levels"]),
                known_types=frozenset(tuple(t) for t in doc["known_types"]),
                rules=rules,
                relations=RelationSet(
                    frozenset(tuple(p) for p in rel.get("dominance", [])),
                    frozenset(frozenset(p) for p in rel.get("interchangeable", []))),
                diagnostics=[InvalidPath(d["session_id"], d["reason"], d.get("position"))
                             for d in doc.get("diagnostics", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceHoundError(f"malformed profile document: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "BehaviorProfile":
        return cls.from_document(json.loads(text))


def conditions_to_doc(conditions: Conditions) -> list:
    return [None if c is None else sorted(c) for c in conditions]


def conditions_from_doc(doc: Sequence) -> Conditions:
    return tuple(None if c is None else frozenset(c) for c in doc)


def _rule_doc(rule: GeneralizedRule) -> dict:
    return {
        "type": list(rule.type),
        "behavior": rule.behavior,
        "conditions": conditions_to_doc(rule.conditions),
        "support": rule.support,
    }


def extract_instance_rule(unit: ExecutionUnit, judge) -> InstanceRule:
    rule = judge.extract(unit)
    if rule.arity != len(unit.calls):
        raise ArityMismatch(f"judge returned {rule.arity} condition sets for {len(unit.calls)} calls")
    return rule


def group_by_type(rules: Iterable[InstanceRule]) -> dict[tuple[str, ...], list[InstanceRule]]:
    groups: dict[tuple[str, ...], list[InstanceRule]] = {}
    for rule in rules:
        groups.setdefault(rule.source_type, []).append(rule)
    return groups


def summarize(group: Sequence[InstanceRule], judge) -> GeneralizedRule:
    if not group:
        raise ValueError("cannot summarize an empty group")
    types = {r.source_type for r in group}
    arities = {r.arity for r in group}
    if len(types) > 1 or len(arities) > 1:
        raise ArityMismatch(f"heterogeneous group: types={sorted(types)} arities={sorted(arities)}")
    return judge.summarize(list(group))


def union_summary(group: Sequence[InstanceRule], threshold: float = 0.0) -> GeneralizedRule:
    """Position-wise merge keeping items seen in more than ``threshold`` of the group.

    Threshold 0 keeps the plain union. Behavior is the most frequent one
    (ties broken lexicographically), so the result ignores group order.
    """
    n = len(group)
    arity = group[0].arity
    merged = []
    for pos in range(arity):
        sets = [r.conditions[pos] for r in group if r.conditions[pos] is not None]
        if not sets:
            merged.append(None)
            continue
        counts = Counter(item for s in sets for item in s)
        merged.append(frozenset(i for i, c in counts.items() if c / n > threshold))
    behaviors = Counter(r.behavior for r in group)
    behavior = min(behaviors, key=lambda b: (-behaviors[b], b))
    return GeneralizedRule(behavior, tuple(merged), group[0].source_type, n)


T = TypeVar("T")
R = TypeVar("R")


def run_mapped(fn: Callable[[T], R], items: Sequence[T], judge, jobs: int = 1) -> list[R]:
    """Map in order; fans out only when the judge declares itself thread-safe."""
    if jobs > 1 and getattr(judge, "thread_safe", False) and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _unit_key(unit: ExecutionUnit) -> str:
    return json.dumps(
        [[c.tool_name, c.query_params, c.mcp_response] for c in unit.calls],
        sort_keys=True, ensure_ascii=False, default=str)


def build_profile(paths: Sequence[ExecutionPath], judge, jobs: int = 1) -> BehaviorProfile:
    """Profile trusted benign paths: hierarchy, units, instance rules, summaries."""
    if not paths:
        raise EmptyCorpus("no benign paths to profile")
    levels = propagate(paths)
    units, invalid = split_paths(paths, levels)
    for d in invalid:
        log.warning("excluded path %s: %s", d.session_id, d.reason)

    # identical units are judged once but still counted once per occurrence
    distinct: dict[str, ExecutionUnit] = {}
    occurrences: Counter[str] = Counter()
    for unit in units:
        key = _unit_key(unit)
        distinct.setdefault(key, unit)
        occurrences[key] += 1
    keys = sorted(distinct)
    extracted = run_mapped(lambda k: extract_instance_rule(distinct[k], judge), keys, judge, jobs)
    instances: list[InstanceRule] = []
    for key, rule in zip(keys, extracted):
        instances.extend([rule] * occurrences[key])

    groups = group_by_type(instances)
    types = sorted(groups)
    summaries = run_mapped(lambda t: summarize(groups[t], judge), types, judge, jobs)
    return BehaviorProfile(
        level_map=levels,
        known_types=frozenset(types),
        rules=dict(zip(types, summaries)),
        relations=relations(paths, levels),
        diagnostics=sorted(invalid, key=lambda d: d.session_id),
    )
