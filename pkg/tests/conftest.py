import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tangentnet.convex import Ball
from tangentnet.curve import AnalyticMap
from tangentnet.net import TangentNet
from tangentnet.stretch import run_lemma_main

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TILT = 0.2


def flat_disc(b: float = TILT) -> AnalyticMap:
    """z -> (a z, b) with a^2 + b^2 = 1: a flat disc with boundary on the unit sphere."""
    return AnalyticMap.polynomial([0, np.sqrt(1 - b * b)], [b])


def hexagon_net(X: AnalyticMap, eps: float = 0.9, J: int = 6) -> TangentNet:
    th = 2 * np.pi * np.arange(J) / J
    return TangentNet(Ball(1.0), X(np.exp(1j * th)), eps)


@pytest.fixture(scope="session")
def flagship():
    """The benchmark stretch: tilted flat disc, Balls (1, 2), six-point net of radius 0.9, delta 0.05."""
    X = flat_disc()
    t0 = time.perf_counter()
    region, Y, report = run_lemma_main(X, Ball(1.0), Ball(2.0), hexagon_net(X), 0.05)
    return {"X": X, "region": region, "Y": Y, "report": report, "seconds": time.perf_counter() - t0}


# --- acceptance verdict lines ----------------------------------------------------------------

_VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n, title = mark.args
    passed = rep.passed and not hasattr(rep, "wasxfail")
    note = ""
    if hasattr(rep, "wasxfail"):
        note = f"  (known failure: {rep.wasxfail})"
    _VERDICTS[n] = f"CRITERION {n} {'PASS' if passed else 'FAIL'}  {title}{note}"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance")
    for n in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[n])
