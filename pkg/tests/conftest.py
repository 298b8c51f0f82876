import pytest

from atomnav.interferometer import InterferometerConfig


@pytest.fixture
def cfg():
    """Default instrument: 780 nm, v_z = 15 m/s, d = 1 mm, L = 9.5 mm."""
    return InterferometerConfig.from_geometry()


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240517)


_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test body sets ``detail`` and asserts."""
    rec = {"name": request.node.name, "detail": ""}
    yield rec
    failed = getattr(request.node, "rep_call", None)
    ok = failed is not None and failed.passed
    _ACCEPTANCE.append((rec["name"], ok, rec["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
