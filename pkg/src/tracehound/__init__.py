"""Provenance-based anomaly detection for LLM-agent tool-invocation traces."""

from .detector import DetectionVerdict, classify, detect_all, semantic_check, structural_check
from .hierarchy import LevelMap, RelationSet, init_levels, propagate, refresh_path_from_anchor, relations
from .ingest import ExecutionPath, ToolCall, load_paths, parse_log, sessionize
from .judge import BaselineJudge, JudgeConfig, MatchResult, RemoteJudge, make_judge, parse_judge_output
from .prompts import render_prompt
from .rules import BehaviorProfile, GeneralizedRule, InstanceRule, build_profile, group_by_type, summarize
from .units import ExecutionUnit, expand_segment, split_paths, unit_type

__version__ = "0.1.0"
