import numpy as np
import pytest

from rwdre.environment import DiscreteEnvSpec, EnvironmentField
from rwdre.lattice import JumpRange


@pytest.fixture
def nn1():
    return JumpRange.nearest_neighbor(1)


@pytest.fixture
def nn2():
    return JumpRange.nearest_neighbor(2)


def make_field(model, rng, kappa=0.1, seed=0, **kw):
    return EnvironmentField(DiscreteEnvSpec(model, rng, kappa, seed=seed, **kw))


@pytest.fixture
def rng0():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion and assert it."""
    def record(number, title, measured, tolerance, passed=None, note=""):
        ok = bool(measured <= tolerance) if passed is None else bool(passed)
        line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: "
                f"measured {measured:.6g} vs tolerance {tolerance:.6g}"
                + (f" ({note})" if note else ""))
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
