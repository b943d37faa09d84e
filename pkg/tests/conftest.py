import pytest

from sarmanov_ruin import (
    Lognormal,
    RegularlyVaryingLaw,
    SarmanovModel,
    SlowlyVaryingSpec,
    Uniform,
    WeibullTail,
)


def make_config_a(theta: float = 1.0) -> SarmanovModel:
    """Pareto-type F (alpha=2, x_m=1, L = 1), Uniform(0,1) discounts, FGM kernels."""
    return SarmanovModel(RegularlyVaryingLaw(2.0, 1.0), Uniform(1.0), theta)


def make_type3(G=None, theta: float = 0.5) -> SarmanovModel:
    F = RegularlyVaryingLaw(1.0, 1.0, SlowlyVaryingSpec("III", 1.0, WeibullTail(0.5)))
    return SarmanovModel(F, Lognormal(0.0, 1.0) if G is None else G, theta)


@pytest.fixture(scope="session")
def config_a():
    return make_config_a(1.0)


@pytest.fixture(scope="session")
def config_a0():
    return make_config_a(0.0)


# one line per acceptance criterion, collected by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
