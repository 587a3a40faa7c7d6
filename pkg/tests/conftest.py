import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pfsnm.cones import ConeSpec, Orthant, Psd, SecondOrder

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"

FAMILIES = {
    "orthant": ConeSpec.of(Orthant(4)),
    "soc": ConeSpec.of(SecondOrder(5), SecondOrder(3)),
    "psd": ConeSpec.of(Psd(3)),
    "product": ConeSpec.of(Orthant(2), SecondOrder(3), Psd(2)),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    ran = any("test_acceptance" in r.nodeid for rs in terminalreporter.stats.values() for r in rs
              if hasattr(r, "nodeid"))
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 14):
        ok, detail = ACCEPTANCE.get(n, (False, "no result recorded (deselected or errored)"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
