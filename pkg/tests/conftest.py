import functools

import pytest

from silentsync import SystemParams, enumerate_runs, execute
from silentsync.kernel import Context

# filled by test_acceptance.report(), printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion")[1]):
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def universe(protocol: str, n: int, f: int, context: str = "gamma_f"):
    """Session-wide cache of materialized universes; enumeration is the slow part."""
    u = enumerate_runs(protocol, SystemParams(n, f, Context(context)))
    u.runs  # materialize once
    return u


def nice(protocol: str, n: int, f: int, context: str = "gamma_f"):
    return execute(protocol, [1] * n, (), SystemParams(n, f, Context(context)))


@pytest.fixture(scope="session")
def stealth31():
    return universe("stealth", 3, 1)


@pytest.fixture(scope="session")
def d1f1_31():
    return universe("d1f1", 3, 1)
