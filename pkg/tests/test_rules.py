import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_path
from tracehound.bench import ScenarioSpec, gen_dataset
from tracehound.bench.generator import BT
from tracehound.errors import ArityMismatch, EmptyCorpus, SchemaVersionMismatch
from tracehound.judge import BaselineJudge, JudgeConfig
from tracehound.rules import (BehaviorProfile, GeneralizedRule, InstanceRule, build_profile,
                              extract_instance_rule, group_by_type, summarize, union_summary)
from tracehound.units import path_units

SIG = ("RecordSymptom", "SuggestSpecialist")


def symptom_unit(symptom, specialist="orthopedics", sid="s"):
    path = make_path(sid, list(SIG),
                     params=[{"text": f"my {symptom} hurts"}, {"specialist": specialist}],
                     responses=[{"symptoms": [f"{symptom} pain"]}, {}])
    return path_units(path, {"RecordSymptom": 0, "SuggestSpecialist": 1})[0]


def test_knee_instance_rule():
    rule = extract_instance_rule(symptom_unit("knee"), BaselineJudge())
    assert rule.behavior == "SuggestSpecialist(orthopedics)"
    assert rule.conditions[0] == {"knee_pain"}
    assert rule.arity == 2
    assert rule.source_type == SIG


def test_single_call_unit():
    unit = path_units(make_path("s", ["Ping"], responses=[{"reply": "pong"}]), {"Ping": 0})[0]
    rule = BaselineJudge().extract(unit)
    assert rule.behavior == "Ping" and rule.conditions == (frozenset({"pong"}),)


def test_group_and_summarize():
    judge = BaselineJudge()
    r1 = judge.extract(symptom_unit("knee"))
    r2 = judge.extract(symptom_unit("arm"))
    groups = group_by_type([r1, r2])
    assert list(groups) == [SIG] and len(groups[SIG]) == 2
    g = summarize(groups[SIG], judge)
    assert g.behavior == "SuggestSpecialist(orthopedics)"
    assert g.conditions[0] == {"knee_pain", "arm_pain"}
    assert g.support == 2 and g.type == SIG


def test_group_edge_cases():
    assert group_by_type([]) == {}
    a = InstanceRule("x", (None,), ("A",))
    b = InstanceRule("y", (None,), ("B",))
    assert sorted(len(g) for g in group_by_type([a, b]).values()) == [1, 1]


def test_singleton_summary_equals_instance():
    r = InstanceRule("Go(x)", (frozenset({"a"}), None), ("A", "B"))
    assert union_summary([r]) == GeneralizedRule.from_instance(r)


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        summarize([InstanceRule("x", (None,), ("A",)), InstanceRule("x", (None, None), ("A",))],
                  BaselineJudge())


def test_union_over_five_instances():
    items = [{"a", "b"}, {"c"}, {"a", "d"}, {"e"}, {"b"}]
    rules = [InstanceRule("Do", (frozenset({f"p{i}"}), frozenset(s), None), ("X", "Y", "Z"))
             for i, s in enumerate(items)]
    g = union_summary(rules)
    assert g.conditions == (frozenset({"p0", "p1", "p2", "p3", "p4"}),
                            frozenset({"a", "b", "c", "d", "e"}), None)
    assert union_summary(rules, threshold=0.3).conditions[1] == {"a", "b"}


cond_st = st.one_of(st.none(), st.frozensets(st.sampled_from("abcdef"), min_size=1, max_size=3))
rule_st = st.builds(lambda beh, c1, c2: InstanceRule(beh, (c1, c2), ("P", "Q")),
                    st.sampled_from(["Go(x)", "Go(y)"]), cond_st, cond_st)


@settings(max_examples=200, deadline=None)
@given(st.lists(rule_st, min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_union_ignores_order(rules, rnd):
    shuffled = list(rules)
    rnd.shuffle(shuffled)
    assert union_summary(shuffled) == union_summary(rules)
    half = len(rules) // 2
    if half:
        left, right = union_summary(rules[:half]), union_summary(rules[half:])
        whole = union_summary(rules).conditions
        for pos in range(2):
            parts = [c for c in (left.conditions[pos], right.conditions[pos]) if c is not None]
            assert whole[pos] == (frozenset().union(*parts) if parts else None)


@pytest.fixture(scope="module")
def clinic_profile():
    spec = ScenarioSpec("clinic", counts=(1300, 0, 0), seed=21)
    traces = gen_dataset(spec)
    judge = BaselineJudge(JudgeConfig(synonym_table=spec.catalog["synonyms"]))
    return traces, judge, build_profile([t.path for t in traces], judge)


def test_clinic_profile_has_office_routes(clinic_profile):
    traces, _, profile = clinic_profile
    assert all(t.label == BT for t in traces)
    offices = {t for sig in profile.known_types for t in sig if t.endswith(".GetVisitChecklist")}
    assert len(offices) == 18
    shown = profile.level_map.display()
    assert shown["GetSymptomKeywords"] == 1 and shown["RecommendOffices"] == 2
    assert set(profile.rules) == set(profile.known_types)
    assert profile.diagnostics == []


def test_support_counts_units(clinic_profile):
    traces, _, profile = clinic_profile
    n_units = sum(len(path_units(t.path, profile.level_map)) for t in traces)
    assert sum(r.support for r in profile.rules.values()) == n_units


def test_profile_shuffle_invariant(clinic_profile):
    traces, judge, profile = clinic_profile
    paths = [t.path for t in traces]
    random.Random(5).shuffle(paths)
    assert build_profile(paths, judge, jobs=4).dumps() == profile.dumps()


def test_profile_document_round_trip(clinic_profile):
    profile = clinic_profile[2]
    text = profile.dumps()
    again = BehaviorProfile.loads(text)
    assert again.dumps() == text
    doc = json.loads(text)
    assert doc["hierarchy"][0] == ["GetSymptomKeywords"]
    doc["schema_version"] = 99
    with pytest.raises(SchemaVersionMismatch):
        BehaviorProfile.from_document(doc)


def test_one_path_profile():
    path = make_path("s", ["A", "B", "C"])
    profile = build_profile([path], BaselineJudge())
    assert profile.known_types == {("A", "B", "C")}


def test_repeated_tool_flattens_instead_of_failing():
    # the fixpoint always orders profiling paths, so no diagnostics arise here
    paths = [make_path("p1", ["A", "B", "A"]), make_path("p2", ["A", "C"])]
    profile = build_profile(paths, BaselineJudge())
    assert profile.level_map.levels == {"A": 0, "B": 0, "C": 1}
    assert profile.diagnostics == []


def test_empty_profile_corpus():
    with pytest.raises(EmptyCorpus):
        build_profile([], BaselineJudge())
