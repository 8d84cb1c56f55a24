"""Collects acceptance outcomes and prints one line per criterion after the run."""
import pytest

TITLES = {
    1: "exact LDP ratios by enumeration",
    2: "alpha identity, brute force vs closed form",
    3: "monotone inversion round-trips",
    4: "Hadamard round-trip and error scaling",
    5: "fig1 presets: auto within 2.5x of all-sample HR",
    6: "error decreasing in m, slope near -1/2",
    7: "small-m error decay in epsilon",
    8: "large-m error slope in epsilon",
    9: "shuffle budget self-consistency",
    10: "first-occurrence law by enumeration",
}

_results: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    entry = _results.setdefault(mark.args[0], {"passed": True, "ran": False, "notes": []})
    entry["ran"] = entry["ran"] or rep.when == "call"
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call":
        entry["notes"] += [v for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(TITLES):
        entry = _results.get(n)
        if entry is None or not entry["ran"]:
            status = "NOT RUN"
        else:
            status = "PASS" if entry["passed"] else "FAIL"
        tr.write_line(f"criterion {n:>2} {status:<7} {TITLES[n]}")
        for note in (entry or {}).get("notes", []):
            tr.write_line(f"             {note}")


@pytest.fixture
def measured(record_property):
    """Attach a one-line measurement to the criterion summary."""
    def _note(text):
        record_property("measured", text)
    return _note
