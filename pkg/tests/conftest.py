import os
import time

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=10,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def grid128():
    from hal.field import Grid
    return Grid.cube(2, 128)


@pytest.fixture(scope="session")
def grid256():
    from hal.field import Grid
    return Grid.cube(2, 256)


# -- acceptance bookkeeping ------------------------------------------------------------

SESSION = {"start": time.time(), "ran": 0, "failed": [], "acceptance": {}}


def pytest_collection_modifyitems(session, config, items):
    # acceptance criteria run last so criterion 10 can see the rest of the suite
    items.sort(key=lambda it: it.get_closest_marker("acceptance") is not None)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid:
        return
    if report.when == "call":
        SESSION["ran"] += 1
    if report.failed:
        SESSION["failed"].append(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    rows = SESSION["acceptance"]
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(rows):
        ok, detail = rows[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def criterion():
    """record(k, ok, detail): store and print the pass/fail line of criterion k."""
    def record(k, ok, detail):
        SESSION["acceptance"][k] = (bool(ok), detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)
    return record


@pytest.fixture
def suite_state():
    return SESSION
