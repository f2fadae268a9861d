import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line and fail the test when ``ok`` is false."""
    lines = request.config.stash[_LINES_KEY]
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _verdict(tag, ok, detail=""):
        line = f"{tag} {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        lines.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_LINES_KEY]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
