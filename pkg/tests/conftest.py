import pytest

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""
    results = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        results[number] = (title, passed, detail)
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}"
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        terminalreporter.write_line(
            f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}")
