import json

import pytest

from conftest import make_path
from tracehound.bench import ScenarioSpec, gen_dataset
from tracehound.bench.generator import AT_C1, AT_C2, BT
from tracehound.detector import (NORMAL, SEMANTIC, STRUCTURAL, DetectionVerdict, Finding, classify,
                                 detect_all, dumps_report, semantic_check, structural_check,
                                 verdicts_from_document)
from tracehound.errors import JudgeFailure
from tracehound.judge import BaselineJudge, JudgeConfig
from tracehound.rules import build_profile


def triage(sid, routes):
    """A1 GetSymptomKeywords -> A2 RecommendOffices -> one checklist per office."""
    symptoms = [s for _, syms in routes for s in syms]
    tools = ["GetSymptomKeywords", "RecommendOffices"] + [f"{o}.GetVisitChecklist" for o, _ in routes]
    params = [{"description": ", ".join(symptoms)}, {"symptoms": symptoms}] + [{"office": o} for o, _ in routes]
    responses = ([{"keywords": symptoms},
                  {"recommendations": [{"office": o, "symptoms": s} for o, s in routes]}]
                 + [{"office": o, "checklist": [f"{o} checklist"]} for o, _ in routes])
    return make_path(sid, tools, params, responses)


BENIGN = [
    triage("b1", [("orthopedics", ["foot pain"])]),
    triage("b2", [("ent", ["ear ache"])]),
    triage("b3", [("orthopedics", ["ankle pain"]), ("psychiatry", ["psychological discomfort"])]),
    triage("b4", [("ent", ["sore throat"]), ("orthopedics", ["foot pain"])]),
    triage("b5", [("psychiatry", ["anxiety"])]),
]


@pytest.fixture(scope="module")
def profile():
    return build_profile(BENIGN, BaselineJudge())


def test_benign_passes(profile):
    assert structural_check(triage("t", [("ent", ["ear ache"])]), profile) == []
    assert classify(triage("t", [("ent", ["ear ache"])]), profile, BaselineJudge()).label == NORMAL


def test_order_violation(profile):
    path = make_path("t", ["RecommendOffices", "GetSymptomKeywords"])
    found = structural_check(path, profile)
    assert found[0].kind == "level_order"
    assert "RecommendOffices (L2) invoked before GetSymptomKeywords (L1)" == found[0].reason


def test_unknown_tool(profile):
    path = make_path("t", ["GetSymptomKeywords", "ExecShell"])
    v = classify(path, profile, BaselineJudge())
    assert v.label == STRUCTURAL and v.evidence[0].kind == "unknown_tool"
    assert v.evidence[0].position == 1


def test_unseen_unit_type(profile):
    path = make_path("t", ["GetSymptomKeywords", "ent.GetVisitChecklist"])
    v = classify(path, profile, BaselineJudge())
    assert v.label == STRUCTURAL and v.evidence[0].kind == "unseen_unit_type"


def test_foot_pain_routed_to_ent(profile):
    v = classify(triage("t", [("ent", ["foot pain"])]), profile, BaselineJudge())
    assert v.label == SEMANTIC
    f = v.evidence[0]
    assert f.kind == "condition_mismatch" and f.position == 1
    assert f.unit == ("GetSymptomKeywords", "RecommendOffices", "ent.GetVisitChecklist")


def test_two_offices_pass(profile):
    path = triage("t", [("orthopedics", ["ankle pain"]), ("psychiatry", ["psychological discomfort"])])
    assert classify(path, profile, BaselineJudge()).label == NORMAL


def test_exhaustive_collects_more(profile):
    path = make_path("t", ["GetSymptomKeywords", "ExecShell", "RecommendOffices", "Curl"])
    assert len(structural_check(path, profile)) == 1
    assert len(structural_check(path, profile, exhaustive=True)) == 2


class Undecided:
    thread_safe = False

    def extract(self, unit):
        raise JudgeFailure("judge timed out", tuple(c.tool_name for c in unit.calls))


def test_strict_and_lenient(profile):
    path = triage("t", [("ent", ["ear ache"])])
    v = classify(path, profile, Undecided(), strict=True)
    assert v.label == SEMANTIC and v.evidence[0].kind == "judge_undecided"
    assert classify(path, profile, Undecided(), strict=False).label == NORMAL
    assert semantic_check(path, profile, Undecided(), strict=False) == []


def test_verdict_invariants():
    with pytest.raises(ValueError):
        DetectionVerdict("s", NORMAL, (Finding("x", "y"),))
    with pytest.raises(ValueError):
        DetectionVerdict("s", SEMANTIC)
    with pytest.raises(ValueError):
        DetectionVerdict("s", "Weird", (Finding("x", "y"),))


def test_report_round_trip(profile):
    paths = [triage("z", [("ent", ["foot pain"])]), BENIGN[0], make_path("y", ["ExecShell"])]
    verdicts = detect_all(paths, profile, BaselineJudge(), jobs=3)
    assert [v.session_id for v in verdicts] == ["b1", "y", "z"]
    doc = json.loads(dumps_report(verdicts))
    assert doc["summary"] == {NORMAL: 1, STRUCTURAL: 1, SEMANTIC: 1, "total": 3}
    assert verdicts_from_document(doc) == verdicts


@pytest.fixture(scope="module")
def generated():
    spec = ScenarioSpec("clinic", counts=(400, 60, 60), seed=5)
    traces = gen_dataset(spec)
    judge = BaselineJudge(JudgeConfig(synonym_table=spec.catalog["synonyms"]))
    benign = [t.path for t in traces if t.label == BT]
    return traces, judge, build_profile(benign, judge)


def test_closure_and_exclusivity(generated):
    traces, judge, profile = generated
    verdicts = {v.session_id: v for v in detect_all([t.path for t in traces], profile, judge)}
    for t in traces:
        v = verdicts[t.session_id]
        kinds = {f.kind for f in v.evidence}
        structural = {"unknown_tool", "level_order", "unseen_unit_type"}
        if v.label == STRUCTURAL:
            assert kinds <= structural
        elif v.label == SEMANTIC:
            assert not kinds & {"unknown_tool", "level_order"}
        if t.label == BT:
            assert v.label == NORMAL, (t.session_id, v.evidence)
        elif t.label == AT_C1:
            assert v.label == STRUCTURAL, (t.cause, v)


def test_classify_is_repeatable(generated):
    traces, judge, profile = generated
    for t in traces[:50]:
        assert classify(t.path, profile, judge) == classify(t.path, profile, judge)


def test_at_c2_mostly_semantic(generated):
    traces, judge, profile = generated
    c2 = [t for t in traces if t.label == AT_C2]
    flagged = [classify(t.path, profile, judge).label for t in c2]
    assert flagged.count(NORMAL) <= len(c2) * 0.1
