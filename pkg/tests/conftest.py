import pytest

from bdtp import Family, make_reward_model

_ACCEPTANCE = {}
_DETAILS = {}


@pytest.fixture
def half():
    return make_reward_model(Family.PLUS_HEAVY, 1)


@pytest.fixture
def report(request):
    """Attach a one-line measurement summary to an acceptance criterion."""
    name = request.node.name

    def note(text):
        _DETAILS[name] = text

    return note


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE.items():
        status = "PASS" if outcome == "passed" else "FAIL"
        detail = _DETAILS.get(name, "")
        terminalreporter.write_line(f"{status}  {name}  {detail}".rstrip())
