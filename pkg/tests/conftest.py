import math
import os

import numpy as np
import pytest

from divcore import LabeledPoint, Vector


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run long benches (k=500, 1000)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow") or os.environ.get("DIVCORE_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="long-running bench; pass --run-slow to include")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


_CRITERIA: dict[tuple[int, str], list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = (mark.args[0], mark.args[1])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(key, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), outcomes in sorted(_CRITERIA.items()):
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] criterion {num}: {title} [checks: {len(outcomes)}]")


_AXES = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


def unit(deg: float) -> Vector:
    """Unit vector at ``deg``; multiples of 90 degrees are exact axis vectors."""
    if deg % 90 == 0:
        return Vector(_AXES[int(deg) % 360])
    r = math.radians(deg)
    return Vector([math.cos(r), math.sin(r)])


def labeled(degrees, stream_id=0, first_id=0):
    return [LabeledPoint(first_id + i, stream_id, first_id + i, unit(d)) for i, d in enumerate(degrees)]


def random_vectors(n, dim, seed):
    rng = np.random.default_rng(seed)
    return [Vector(x) for x in rng.normal(size=(n, dim))]


@pytest.fixture
def angles():
    return labeled
