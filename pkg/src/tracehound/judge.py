"""Semantic judges: a deterministic offline baseline and a remote LLM client.

Both expose the same three methods used by profiling and detection:

    extract(unit)              -> InstanceRule
    summarize(rules)           -> GeneralizedRule
    check(anchor, candidate)   -> MatchResult
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator, Mapping

from .errors import JudgeFailure, MalformedJudgeOutput, RemoteUnavailable, TraceHoundError
from .prompts import render_prompt
from .rules import GeneralizedRule, InstanceRule, union_summary
from .units import ExecutionUnit, unit_type

ENDPOINT_ENV = "TRACEHOUND_JUDGE_ENDPOINT"
API_KEY_ENV = "TRACEHOUND_JUDGE_API_KEY"

DEFAULT_ROUTING_KEYS = ("office", "department", "specialist", "track", "target")

STOP_TOKENS = frozenset({
    "ok", "success", "successful", "true", "false", "none", "null", "yes", "no",
    "done", "status", "result", "n_a", "na", "unknown",
})

# leaf strings longer than this are free text, not conditions
MAX_ITEM_WORDS = 6


def canonical(text: Any) -> str:
    return re.sub(r"[^0-9a-z]+", "_", str(text).lower()).strip("_")


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    reason: str
    position: int | None = None

    def __post_init__(self):
        if not self.matched and not self.reason:
            raise ValueError("a mismatch needs a reason")


@dataclass
class JudgeConfig:
    mode: str = "baseline"
    scenario_label: str = "agent"
    synonym_table: dict = field(default_factory=dict)
    routing_keys: tuple = DEFAULT_ROUTING_KEYS
    majority_threshold: float = 0.0
    endpoint: str | None = None
    api_key: str | None = None
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.5
    max_in_flight: int = 4
    strict: bool = True

    def __post_init__(self):
        if self.mode not in ("baseline", "remote"):
            raise TraceHoundError(f"unknown judge mode {self.mode!r}")
        self.synonym_table = close_synonyms(self.synonym_table)
        self.routing_keys = tuple(self.routing_keys)

    @classmethod
    def from_document(cls, doc: Mapping, base_dir: Path | None = None) -> "JudgeConfig":
        doc = dict(doc)
        synonyms = dict(doc.pop("synonyms", {}) or {})
        syn_file = doc.pop("synonym_file", None)
        if syn_file:
            path = Path(syn_file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            synonyms.update(json.loads(path.read_text(encoding="utf-8")))
        if "synonym_table" in doc:
            synonyms.update(doc.pop("synonym_table"))
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise TraceHoundError(f"unknown judge config keys: {sorted(unknown)}")
        cfg = cls(synonym_table=synonyms, **doc)
        cfg.endpoint = cfg.endpoint or os.environ.get(ENDPOINT_ENV)
        cfg.api_key = cfg.api_key or os.environ.get(API_KEY_ENV)
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "JudgeConfig":
        path = Path(path)
        return cls.from_document(json.loads(path.read_text(encoding="utf-8")), path.parent)


def close_synonyms(table: Mapping[str, Any]) -> dict[str, frozenset[str]]:
    """Canonicalize and apply the symmetric closure."""
    out: dict[str, set[str]] = {}
    for key, values in table.items():
        if isinstance(values, str):
            values = [values]
        k = canonical(key)
        for v in values:
            v = canonical(v)
            if v and v != k:
                out.setdefault(k, set()).add(v)
                out.setdefault(v, set()).add(k)
    return {k: frozenset(v) for k, v in out.items()}


# -- deterministic baseline -------------------------------------------------

def _leaves(doc: Any) -> Iterator[Any]:
    if isinstance(doc, Mapping):
        for v in doc.values():
            yield from _leaves(v)
    elif isinstance(doc, (list, tuple)):
        for v in doc:
            yield from _leaves(v)
    else:
        yield doc


def _mentions(doc: Any, token: str) -> bool:
    return any(isinstance(v, str) and canonical(v) == token for v in _leaves(doc))


def focus(doc: Any, token: str | None) -> Any:
    """Narrow lists of records to those mentioning ``token`` (when any do)."""
    if token is None:
        return doc
    if isinstance(doc, Mapping):
        return {k: focus(v, token) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        records = [v for v in doc if isinstance(v, Mapping)]
        if records and len(records) == len(doc):
            hits = [r for r in records if _mentions(r, token)]
            if hits:
                return [focus(r, token) for r in hits]
        return [focus(v, token) for v in doc]
    return doc


def condition_items(doc: Any) -> frozenset[str]:
    items = set()
    for leaf in _leaves(doc):
        if not isinstance(leaf, str) or len(leaf.split()) > MAX_ITEM_WORDS:
            continue
        tok = canonical(leaf)
        if tok and tok not in STOP_TOKENS and not any(ch.isdigit() for ch in tok):
            items.add(tok)
    return frozenset(items)


def routing_call(calls, keys) -> tuple[int, str | None]:
    """Last call carrying a routing key, with that key's canonical value."""
    for idx in range(len(calls) - 1, -1, -1):
        call = calls[idx]
        for doc in (call.query_params, call.mcp_response):
            for key in keys:
                value = doc.get(key) if isinstance(doc, Mapping) else None
                if isinstance(value, str) and canonical(value):
                    return idx, canonical(value)
    return len(calls) - 1, None


class BaselineJudge:
    """Offline judge with exact canonical-token semantics plus a synonym table."""

    thread_safe = True

    def __init__(self, config: JudgeConfig | None = None):
        self.config = config or JudgeConfig()

    def behavior_of(self, calls) -> tuple[str, str | None]:
        idx, arg = routing_call(calls, self.config.routing_keys)
        name = calls[idx].tool_name
        return (f"{name}({arg})" if arg else name), arg

    def extract(self, unit: ExecutionUnit) -> InstanceRule:
        behavior, arg = self.behavior_of(unit.calls)
        conditions = []
        for call in unit.calls:
            source = call.mcp_response or call.query_params
            items = condition_items(focus(source, arg))
            if arg:
                items = items - {arg}
            conditions.append(items or None)
        return InstanceRule(behavior, tuple(conditions), unit_type(unit))

    def summarize(self, rules) -> GeneralizedRule:
        return union_summary(rules, self.config.majority_threshold)

    def equivalent(self, a: str, b: str) -> bool:
        a, b = canonical(a), canonical(b)
        return a == b or b in self.config.synonym_table.get(a, ())

    def check(self, anchor: GeneralizedRule, candidate: InstanceRule) -> MatchResult:
        return check_conditions(anchor, candidate, self.equivalent)


def check_conditions(anchor: GeneralizedRule, candidate: InstanceRule, equivalent=None) -> MatchResult:
    """Order-sensitive, at-least-one-item matching over aligned positions."""
    if equivalent is None:
        equivalent = lambda a, b: canonical(a) == canonical(b)  # noqa: E731
    if anchor.arity != candidate.arity:
        return MatchResult(False, f"arity mismatch: anchor has {anchor.arity} condition sets, "
                                  f"candidate has {candidate.arity}")
    for pos, (want, got) in enumerate(zip(anchor.conditions, candidate.conditions)):
        if want is None or got is None or not want:
            continue
        if not any(equivalent(a, b) for a in want for b in got):
            tool = anchor.type[pos] if pos < len(anchor.type) else f"#{pos + 1}"
            shown = sorted(want)
            more = f" (+{len(shown) - 8} more)" if len(shown) > 8 else ""
            return MatchResult(
                False,
                f"position {pos + 1} ({tool}): {sorted(got)} matches none of {shown[:8]}{more}",
                pos)
    return MatchResult(True, f"all {anchor.arity} condition sets matched")


# -- remote judge -----------------------------------------------------------

def _parse_condition(value: Any) -> frozenset[str] | None:
    if value is None:
        return None
    if isinstance(value, str):
        text = value.strip().strip("()[]{}").strip()
        if canonical(text) in ("", "null", "none"):
            return None
        parts = re.split(r"[,;|]|\s+or\s+|\s+and\s+", text)
    elif isinstance(value, list) and all(isinstance(v, str) for v in value):
        parts = value
    else:
        raise ValueError(f"condition must be a string, list of strings, or null: {value!r}")
    items = frozenset(t for t in (canonical(p) for p in parts) if t and t not in ("null", "none"))
    return items or None


def _format_condition(cond: frozenset[str] | None) -> str:
    return "(None)" if cond is None else "(" + ", ".join(sorted(cond)) + ")"


def rule_payload(rule) -> dict:
    return {"Behavior": rule.behavior, "Conditions": [_format_condition(c) for c in rule.conditions]}


def _validate(doc: Any, expect: str):
    if not isinstance(doc, dict):
        raise ValueError("not an object")
    if expect == "match":
        matched, reason = doc.get("Matched"), doc.get("Reason")
        if not isinstance(matched, bool):
            raise ValueError("'Matched' must be a boolean")
        if not isinstance(reason, str):
            raise ValueError("'Reason' must be a string")
        if not matched and not reason.strip():
            raise ValueError("mismatch without a reason")
        return MatchResult(matched, reason)
    behavior, conds = doc.get("Behavior"), doc.get("Conditions")
    if not isinstance(behavior, str) or not behavior.strip():
        raise ValueError("'Behavior' must be a non-empty string")
    if not isinstance(conds, list) or not conds:
        raise ValueError("'Conditions' must be a non-empty list")
    parsed = tuple(_parse_condition(c) for c in conds)
    if expect == "instance":
        return InstanceRule(behavior.strip(), parsed)
    if expect == "generalized":
        return GeneralizedRule(behavior.strip(), parsed, ())
    raise ValueError(f"unknown expectation {expect!r}")


_MAX_SPANS = 256


def parse_judge_output(text: Any, expect: str = "match"):
    """First JSON object in ``text`` that validates as ``expect``.

    ``expect`` is one of ``instance``, ``generalized``, ``match``. Anything
    else raises MalformedJudgeOutput carrying the raw reply.
    """
    if expect not in ("instance", "generalized", "match"):
        raise ValueError(f"unknown expectation {expect!r}")
    if not isinstance(text, str):
        raise MalformedJudgeOutput("judge reply is not text", raw=repr(text))
    decoder = json.JSONDecoder()
    last = "no JSON object found"
    start = text.find("{")
    spans = 0
    while start != -1 and spans < _MAX_SPANS:
        spans += 1
        try:
            doc, _ = decoder.raw_decode(text, start)
            return _validate(doc, expect)
        except (ValueError, RecursionError, TypeError) as exc:
            last = str(exc)[:200]
        start = text.find("{", start + 1)
    raise MalformedJudgeOutput(f"malformed judge output: {last}", raw=text)


class RemoteJudge:
    """LLM judge over HTTP: POSTs the rendered prompt, reads the completion text."""

    thread_safe = True

    def __init__(self, config: JudgeConfig, client=None, sleep=time.sleep):
        if not config.endpoint:
            raise TraceHoundError(f"remote judge needs an endpoint (config or ${ENDPOINT_ENV})")
        self.config = config
        if client is None:
            import httpx
            client = httpx.Client(timeout=config.timeout)
        self.client = client
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, config.max_in_flight))

    def _post(self, prompt: str) -> str:
        headers = {"Content-Type": "text/plain; charset=utf-8"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        with self._slots:
            resp = self.client.post(self.config.endpoint, content=prompt.encode("utf-8"),
                                    headers=headers, timeout=self.config.timeout)
        resp.raise_for_status()
        return resp.text

    def _ask(self, template: str, payload: Any, expect: str, unit=None):
        import httpx

        prompt = render_prompt(template, payload, self.config.scenario_label)
        error: JudgeFailure | None = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                return parse_judge_output(self._post(prompt), expect)
            except httpx.HTTPError as exc:
                error = RemoteUnavailable(f"judge request failed: {exc}", unit)
            except MalformedJudgeOutput as exc:
                exc.unit = unit
                error = exc
        raise error

    def extract(self, unit: ExecutionUnit) -> InstanceRule:
        sig = unit_type(unit)
        payload = [{"ToolName": c.tool_name, "QueryParams": c.query_params,
                    "McpResponse": c.mcp_response} for c in unit.calls]
        rule = self._ask("rule_discovery", payload, "instance", sig)
        if rule.arity != len(unit.calls):
            raise MalformedJudgeOutput(
                f"expected {len(unit.calls)} condition sets, got {rule.arity}",
                raw=json.dumps(rule_payload(rule)))
        return replace(rule, source_type=sig)

    def summarize(self, rules) -> GeneralizedRule:
        sig = rules[0].source_type
        out = self._ask("rule_summary", [rule_payload(r) for r in rules], "generalized", sig)
        if out.arity != rules[0].arity:
            raise MalformedJudgeOutput(
                f"summary has {out.arity} condition groups, expected {rules[0].arity}",
                raw=json.dumps(rule_payload(out)))
        return replace(out, type=sig, support=len(rules))

    def check(self, anchor: GeneralizedRule, candidate: InstanceRule) -> MatchResult:
        if anchor.arity != candidate.arity:
            return check_conditions(anchor, candidate)
        payload = {"anchor_behavior": rule_payload(anchor),
                   "wait_check_behavior": rule_payload(candidate)}
        return self._ask("condition_check", payload, "match", anchor.type)


def make_judge(config: JudgeConfig | None = None, **kwargs):
    config = config or JudgeConfig()
    if config.mode == "remote":
        return RemoteJudge(config, **kwargs)
    return BaselineJudge(config)
