import re

_VERDICTS = {}
_LINE = re.compile(r"^\[criterion (\d+)\] (PASS|FAIL): .*$", re.M)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    text = report.capstdout or ""
    found = _LINE.findall(text)
    if found:
        for match in _LINE.finditer(text):
            _VERDICTS[int(match.group(1))] = match.group(0)
    elif report.failed:
        num = re.search(r"criterion_(\d+)", report.nodeid)
        if num:
            _VERDICTS[int(num.group(1))] = f"[criterion {int(num.group(1))}] FAIL: raised before reporting"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[n])
