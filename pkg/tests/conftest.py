import pytest
from hypothesis import settings

# fixed example generation keeps test_output.txt reproducible
settings.register_profile("reproducible", derandomize=True)
settings.load_profile("reproducible")

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash[_KEY]

    def record(number: int, ok: bool, detail: str) -> bool:
        lines.append((number, f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"))
        print(lines[-1][1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
