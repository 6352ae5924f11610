import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracehound.errors import DuplicateSeq, MalformedRecord
from tracehound.ingest import (ExecutionPath, ToolCall, load_paths, parse_log, record_to_call,
                               serialize_call, sessionize, write_log)


def rec(sid="s1", seq=0, tool="RecommendOffices", **kw):
    base = {"session_id": sid, "seq": seq, "tool_name": tool, "query_params": {}, "mcp_response": {}}
    base.update(kw)
    return base


def jsonl(*records):
    return "".join(json.dumps(r) + "\n" for r in records)


def test_single_record():
    calls, diags = parse_log(jsonl(rec()).encode())
    assert diags == []
    assert [c.tool_name for c in calls] == ["RecommendOffices"]


def test_missing_tool_name_is_diagnosed():
    r = rec()
    del r["tool_name"]
    calls, diags = parse_log(jsonl(r))
    assert calls == []
    assert len(diags) == 1 and isinstance(diags[0], MalformedRecord)
    assert diags[0].line == 1 and "tool_name" in diags[0].reason


def test_clinic_session_keeps_order():
    tools = ["GetSymptomKeywords", "RecommendOffices", "orthopedics.GetVisitChecklist", "WriteFile"]
    text = jsonl(*(rec(seq=i, tool=t) for i, t in enumerate(tools)))
    calls, diags = parse_log(io.BytesIO(text.encode()))
    assert not diags
    assert [c.tool_name for c in calls] == tools


@pytest.mark.parametrize("line, needle", [
    ("not json", "invalid JSON"),
    ("[1, 2]", "not an object"),
    (json.dumps(rec(seq=-1)), "seq"),
    (json.dumps(rec(seq=True)), "seq"),
    (json.dumps(rec(tool="")), "tool_name"),
    (json.dumps(rec(query_params=[])), "query_params"),
    (json.dumps(rec(timestamp="noon")), "timestamp"),
    (json.dumps(rec(session_id=3)), "session_id"),
])
def test_bad_lines(line, needle):
    text = jsonl(rec(seq=0)) + line + "\n" + jsonl(rec(seq=1))
    calls, diags = parse_log(text)
    assert len(calls) == 2
    assert len(diags) == 1
    assert diags[0].line == 2 and needle in diags[0].reason


def test_blank_lines_skipped():
    calls, diags = parse_log("\n\n" + jsonl(rec()) + "   \n")
    assert len(calls) == 1 and not diags


def test_extra_fields_round_trip():
    call = record_to_call(rec(agent="triage-bot", timestamp=1700000000000))
    assert call.extra == {"agent": "triage-bot"}
    assert json.loads(serialize_call(call)) == rec(agent="triage-bot", timestamp=1700000000000)


def test_sessionize_interleaved():
    calls, _ = parse_log(jsonl(rec("a", 1, "X"), rec("b", 0, "Y"), rec("a", 0, "W"), rec("b", 1, "Z")))
    paths, rejected = sessionize(calls)
    assert not rejected
    assert [p.session_id for p in paths] == ["a", "b"]
    assert paths[0].tools == ("W", "X") and paths[1].tools == ("Y", "Z")


def test_sessionize_empty():
    assert sessionize([]) == ([], [])


def test_duplicate_seq_rejects_session():
    calls, _ = parse_log(jsonl(rec("a", 0), rec("a", 0, "Other"), rec("b", 0)))
    paths, rejected = sessionize(calls)
    assert [p.session_id for p in paths] == ["b"]
    assert len(rejected) == 1 and isinstance(rejected[0], DuplicateSeq)
    assert rejected[0].session_id == "a" and rejected[0].seq == 0
    assert len(rejected[0].calls) == 2


def test_load_paths_merges_diagnostics():
    text = jsonl(rec("a", 0), rec("a", 0)) + "{broken\n"
    paths, diags = load_paths(text)
    assert paths == []
    assert {type(d) for d in diags} == {MalformedRecord, DuplicateSeq}


def test_execution_path_invariants():
    with pytest.raises(ValueError):
        ExecutionPath("s", ())
    with pytest.raises(ValueError):
        ExecutionPath("s", (ToolCall("s", 1, "A"), ToolCall("s", 1, "B")))
    with pytest.raises(ValueError):
        ExecutionPath("s", (ToolCall("s", 0, "A"), ToolCall("t", 1, "B")))


json_leaf = st.one_of(st.none(), st.booleans(), st.integers(-10**6, 10**6), st.text(max_size=12))
json_doc = st.dictionaries(st.text(max_size=8), st.one_of(json_leaf, st.lists(json_leaf, max_size=3)),
                           max_size=4)
call_st = st.builds(
    ToolCall,
    session_id=st.sampled_from(["s1", "s2", "s3"]),
    seq=st.integers(0, 6),
    tool_name=st.text(min_size=1, max_size=10),
    query_params=json_doc,
    mcp_response=json_doc,
    timestamp=st.one_of(st.none(), st.integers(0, 2**45)),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(call_st, max_size=12))
def test_round_trip_and_multiset(calls):
    buf = io.StringIO()
    write_log(calls, buf)
    parsed, diags = parse_log(buf.getvalue().encode("utf-8"))
    assert not diags
    assert parsed == calls

    paths, rejected = sessionize(parsed)
    kept = [c for p in paths for c in p.calls]
    dropped = [c for r in rejected for c in r.calls]
    assert len(parsed) == len(kept) + len(dropped)
    key = serialize_call
    assert sorted(map(key, parsed)) == sorted(map(key, kept + dropped))
    for p in paths:
        seqs = [c.seq for c in p.calls]
        assert seqs == sorted(set(seqs))
