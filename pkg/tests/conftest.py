_acceptance_results = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        if report.when == "call":
            _acceptance_results.append((name, report.outcome))
        elif report.when == "setup" and report.outcome != "passed":
            _acceptance_results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        status = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{status}  {name}")
