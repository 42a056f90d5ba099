import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from policy_newton.fixtures import chain2, saddle3, zero_cost
from policy_newton.policy import TabularSoftmaxPolicy

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def chain():
    return chain2()


@pytest.fixture
def saddle():
    return saddle3()


@pytest.fixture
def zero():
    return zero_cost()


def policy_for(mdp, **bounds):
    return TabularSoftmaxPolicy.for_mdp(mdp, **bounds)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
