from __future__ import annotations

from collections import defaultdict

import pytest
from hypothesis import settings

# fixed example generation so every run of the suite checks the same cases
settings.register_profile("deterministic", derandomize=True, print_blob=True)
settings.load_profile("deterministic")

# criterion id -> list of (test name, outcome, note)
_ACCEPTANCE: dict[int, list[tuple[str, str, str]]] = defaultdict(list)
_TITLES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): test belongs to an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    _TITLES[number] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            state = "xfail" if report.skipped else "xpass"
        else:
            state = report.outcome
        note = ""
        if report.longrepr is not None and state != "passed":
            text = str(getattr(report.longrepr, "reprcrash", None) or report.longrepr)
            note = text.strip().splitlines()[-1][:160] if text.strip() else ""
        _ACCEPTANCE[number].append((item.name, state, note))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        results = _ACCEPTANCE[number]
        ok = all(state == "passed" for _, state, _ in results)
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {_TITLES[number]}")
        for name, state, note in results:
            if state != "passed":
                tr.write_line(f"    {name}: {state}  {note}")
