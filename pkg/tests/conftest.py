"""Shared fixtures and the acceptance-report hook."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gisc import GridParams, VscParams
from gisc.grid import CALIBRATED_C_F_PU
from gisc.sim import Event, Scenario, assemble_model, simulate

settings.register_profile("gisc", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gisc")

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        # a criterion spread over several tests fails if any one of them fails
        prev = _ACCEPTANCE.get(number, (title, "PASS"))[1]
        ok = report.outcome == "passed" and prev == "PASS"
        _ACCEPTANCE[number] = (title, "PASS" if ok else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("acceptance")
    if m is not None:
        outcome.get_result()._acceptance = m.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")


@pytest.fixture(scope="session")
def vsc() -> VscParams:
    return VscParams()


@pytest.fixture(scope="session")
def grid_stable() -> GridParams:
    return GridParams(l_line_pu=0.20, c_f_pu=CALIBRATED_C_F_PU)


@pytest.fixture(scope="session")
def grid_unstable() -> GridParams:
    return GridParams(l_line_pu=0.26, c_f_pu=CALIBRATED_C_F_PU)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def line_step_trace(vsc, grid_stable):
    """Line reactance stepped 0.20 -> 0.26 pu at t = 2 s, 10 s of simulated time."""
    model = assemble_model(vsc, grid_stable)
    return simulate(model, Scenario(t_end=10.0, events=(Event(2.0, "l_line_pu", 0.26),)))
