import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m and rep.when == "call" or (m and outcome == "error"):
                key = (int(m.group(1)), m.group(2).replace("_", " "))
                results[key] = "pass" if outcome == "passed" else "fail"
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), verdict in sorted(results.items()):
        terminalreporter.write_line(f"criterion {n:2d} {name:<28} {verdict}")
