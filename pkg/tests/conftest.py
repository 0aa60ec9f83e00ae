import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (label, ok, detail) then assert ok."""
    def record(label: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE[label] = (bool(ok), detail)
        return ok
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = getattr(item.function, "acceptance_label", None)
    if label and rep.when == "call" and rep.failed:
        _ACCEPTANCE[label] = (False, _ACCEPTANCE.get(label, (False, "raised before reporting"))[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        ok, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
