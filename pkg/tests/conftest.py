import numpy as np
import pytest

from bussplit.domain import LineParameters, sample_line
from bussplit.rng import SubstreamRNG


class ScriptedRNG:
    """Stand-in draw source: every arrival draw yields ``arrivals`` passengers and
    every binomial yields ``min(n, alight)``. Cruise noise must be disabled."""

    def __init__(self, arrivals=2, alight=1):
        self.arrivals = arrivals
        self.alight = alight

    def gamma(self, run, unit, shape, scale):
        raise AssertionError("cruise noise should be off in scripted runs")

    def binomial(self, run, unit, n, p):
        return min(n, self.alight)

    def poisson(self, run, unit, mean):
        return self.arrivals


def make_instance(iteration=0, seed=3, **overrides):
    params = LineParameters(**overrides)
    return sample_line(params, SubstreamRNG(seed, iteration).line())


@pytest.fixture
def table1():
    return LineParameters()


@pytest.fixture
def rng_seeded():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
