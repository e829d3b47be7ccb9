import time

import pytest

from sextic import hvpt

#: acceptance outcomes, filled by tests/test_acceptance.py
ACCEPTANCE = {}
#: wall-clock seconds of expensive fixtures
TIMINGS = {}


@pytest.fixture(scope="session")
def x2_series_300():
    return hvpt.moment_series(0, 1, 300)


@pytest.fixture(scope="session")
def e1_series_500():
    return hvpt.generate_series(1, 500)[0]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def x2_series_1000():
    # about a minute; shared by the asymptotics and acceptance tests
    t0 = time.perf_counter()
    s = hvpt.moment_series(0, 1, 1000)
    TIMINGS["x2_series_1000"] = time.perf_counter() - t0
    return s
