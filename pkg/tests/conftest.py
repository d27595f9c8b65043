import functools

import pytest

from geodequiv import gallery


@functools.lru_cache(maxsize=None)
def cached_entry(name, **kw):
    return gallery.entry(name, **kw)


@pytest.fixture(scope="session")
def entries():
    """Gallery entries built once per session (curvature is memoized on the metrics)."""
    return cached_entry


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record and print the PASS/FAIL line of one acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def emit(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
