import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from collocated_adaptive.model import TwoLinkArm, TwoLinkGeometry  # noqa: E402

DESK_GEOMETRY = TwoLinkGeometry(m1=2.0, m2=1.0, l1=0.4, lc1=0.2, lc2=0.2, I1=0.02, I2=0.01,
                                fv1=0.5, fv2=0.1)


@pytest.fixture
def model():
    return TwoLinkArm()


@pytest.fixture
def geometry():
    return DESK_GEOMETRY


@pytest.fixture
def true_params():
    return DESK_GEOMETRY.base_params()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[n])
