"""Two-step violation detection: structure first, then unit conditions."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .errors import JudgeFailure
from .ingest import ExecutionPath
from .rules import SCHEMA_VERSION, BehaviorProfile, conditions_to_doc
from .units import first_order_violation, path_units, unit_type

log = logging.getLogger(__name__)

NORMAL = "Normal"
STRUCTURAL = "StructuralAnomaly"
SEMANTIC = "SemanticAnomaly"
LABELS = (NORMAL, STRUCTURAL, SEMANTIC)


@dataclass(frozen=True)
class Finding:
    kind: str
    reason: str
    unit: tuple[str, ...] | None = None
    position: int | None = None
    conditions: list | None = None

    def to_document(self) -> dict:
        doc = {"kind": self.kind, "reason": self.reason}
        if self.unit is not None:
            doc["unit"] = list(self.unit)
        if self.position is not None:
            doc["position"] = self.position
        if self.conditions is not None:
            doc["conditions"] = self.conditions
        return doc


@dataclass(frozen=True)
class DetectionVerdict:
    session_id: str
    label: str
    evidence: tuple[Finding, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"bad label {self.label!r}")
        if (self.label == NORMAL) != (not self.evidence):
            raise ValueError("Normal verdicts carry no evidence; anomalies carry some")

    @property
    def is_anomaly(self) -> bool:
        return self.label != NORMAL

    def to_document(self) -> dict:
        return {"session_id": self.session_id, "label": self.label,
                "evidence": [f.to_document() for f in self.evidence]}


def structural_check(path: ExecutionPath, profile: BehaviorProfile,
                     exhaustive: bool = False) -> list[Finding]:
    """Empty list means the path passes."""
    lv = profile.level_map.levels
    tools = path.tools
    findings: list[Finding] = []
    for pos, tool in enumerate(tools):
        if tool not in lv:
            findings.append(Finding("unknown_tool", f"tool {tool} never seen while profiling",
                                    position=pos))
            if not exhaustive:
                return findings
    if findings:
        return findings

    bad = first_order_violation(tools, lv)
    if bad is not None:
        prev, cur = tools[bad - 1], tools[bad]
        return [Finding("level_order",
                        f"{prev} (L{lv[prev] + 1}) invoked before {cur} (L{lv[cur] + 1})",
                        position=bad)]

    seen: set[tuple[str, ...]] = set()
    for unit in path_units(path, lv):
        sig = unit_type(unit)
        if sig in seen:
            continue
        seen.add(sig)
        if sig not in profile.known_types:
            findings.append(Finding("unseen_unit_type",
                                    "unit type " + " -> ".join(sig) + " never profiled", unit=sig))
            if not exhaustive:
                break
    return findings


def semantic_check(path: ExecutionPath, profile: BehaviorProfile, judge,
                   exhaustive: bool = False, strict: bool = True) -> list[Finding]:
    findings: list[Finding] = []
    for unit in path_units(path, profile.level_map):
        sig = unit_type(unit)
        anchor = profile.rules.get(sig)
        if anchor is None:
            findings.append(Finding("unseen_unit_type", "no rule for unit type", unit=sig))
        else:
            try:
                candidate = judge.extract(unit)
                result = judge.check(anchor, candidate)
            except JudgeFailure as exc:
                if not strict:
                    log.warning("judge undecided on %s, lenient mode: skipping (%s)",
                                path.session_id, exc)
                    continue
                findings.append(Finding("judge_undecided", str(exc), unit=sig))
            else:
                if result.matched:
                    continue
                findings.append(Finding("condition_mismatch", result.reason, unit=sig,
                                        position=result.position,
                                        conditions=conditions_to_doc(candidate.conditions)))
        if not exhaustive:
            break
    return findings


def classify(path: ExecutionPath, profile: BehaviorProfile, judge,
             exhaustive: bool = False, strict: bool = True) -> DetectionVerdict:
    findings = structural_check(path, profile, exhaustive)
    if findings:
        return DetectionVerdict(path.session_id, STRUCTURAL, tuple(findings))
    findings = semantic_check(path, profile, judge, exhaustive, strict)
    if findings:
        return DetectionVerdict(path.session_id, SEMANTIC, tuple(findings))
    return DetectionVerdict(path.session_id, NORMAL)


def detect_all(paths: Sequence[ExecutionPath], profile: BehaviorProfile, judge,
               jobs: int = 1, exhaustive: bool = False, strict: bool = True
               ) -> list[DetectionVerdict]:
    """Classify every path; output is ordered by session_id whatever the scheduling."""
    def one(p):
        return classify(p, profile, judge, exhaustive, strict)

    if jobs > 1 and getattr(judge, "thread_safe", False):
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(one, paths))
    else:
        verdicts = [one(p) for p in paths]
    return sorted(verdicts, key=lambda v: v.session_id)


def summary_counts(verdicts: Sequence[DetectionVerdict]) -> dict[str, int]:
    counts = {label: 0 for label in LABELS}
    for v in verdicts:
        counts[v.label] += 1
    counts["total"] = len(verdicts)
    return counts


def report_document(verdicts: Sequence[DetectionVerdict]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "summary": summary_counts(verdicts),
        "verdicts": [v.to_document() for v in verdicts],
    }


def dumps_report(verdicts: Sequence[DetectionVerdict]) -> str:
    return json.dumps(report_document(verdicts), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def verdicts_from_document(doc: dict) -> list[DetectionVerdict]:
    out = []
    for v in doc["verdicts"]:
        evidence = tuple(
            Finding(f["kind"], f["reason"], tuple(f["unit"]) if "unit" in f else None,
                    f.get("position"), f.get("conditions"))
            for f in v.get("evidence", []))
        out.append(DetectionVerdict(v["session_id"], v["label"], evidence))
    return out
