import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tracehound.ingest import ExecutionPath, ToolCall  # noqa: E402


def make_path(sid, tools, params=None, responses=None):
    params = params or [{}] * len(tools)
    responses = responses or [{}] * len(tools)
    return ExecutionPath(sid, tuple(
        ToolCall(sid, i, t, q, r) for i, (t, q, r) in enumerate(zip(tools, params, responses))))


@pytest.fixture
def path_of():
    return make_path


def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    if results is None or not results.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results.RESULTS):
        terminalreporter.write_line(results.RESULTS[n])
