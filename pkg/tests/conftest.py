import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(1234)


# -- acceptance report ------------------------------------------------------
# Tests marked ``criterion(n)`` feed one PASS/FAIL line per criterion into the
# terminal summary. An expected failure (xfail) is reported as FAIL.

_acceptance: dict[int, list[tuple[str, bool, list[str]]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ok = rep.passed and not hasattr(rep, "wasxfail")
        details = [str(v) for k, v in item.user_properties if k == "detail"]
        _acceptance.setdefault(mark.args[0], []).append((item.name, ok, details))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        parts = _acceptance[n]
        ok = all(p[1] for p in parts)
        notes = "; ".join(d for _, good, ds in parts for d in ds) or ", ".join(p[0] for p in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {notes}")
