import re

import numpy as np
import pytest

from brwspeed.convex import PLConvex


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def wedge():
    # +inf left of 0, 1 - theta on [0, 1], theta - 1 after
    return PLConvex.build([0.0, 1.0], [1.0, 0.0], None, 1.0)


# -- acceptance summary ----------------------------------------------------

_ACCEPTANCE: dict[int, list[tuple[str, str]]] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        status = "PASS" if report.outcome == "passed" else "FAIL"
        entries = _ACCEPTANCE.setdefault(int(m.group(1)), [])
        entries[:] = [e for e in entries if e[0] != m.group(2)] + [(m.group(2), status)]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[k]
        ok = all(s == "PASS" for _, s in parts)
        detail = ", ".join(f"{name} {s}" for name, s in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  ({detail})")
