"""Shared fixtures: the continuation families are expensive, so they are
computed once per session and reused by the solver, normalization, and
acceptance tests."""

import pytest

from shellwave.full_solver import continuation_in_eps
from shellwave.normalization import to_original
from shellwave.potentials import PotentialSpec

SINE_SCHEDULE = (0.5, 0.45, 0.4, 0.35, 0.3)
SINE_C1, SINE_C2 = 0.5, 1.5
SINE_T_BRACKET = (7.5, 9.5)


@pytest.fixture(scope="session")
def sine_spec():
    return PotentialSpec.sine()


@pytest.fixture(scope="session")
def sine_family(sine_spec):
    res = continuation_in_eps(
        2, 3.0, sine_spec, SINE_SCHEDULE, SINE_C1, SINE_C2, SINE_T_BRACKET,
        gamma=0.6)
    assert res.completed, res.failure
    return res


@pytest.fixture(scope="session")
def sine_records(sine_family, sine_spec):
    return [to_original(m.full, sine_spec) for m in sine_family.members]


@pytest.fixture(scope="session")
def supercritical_family(sine_spec):
    res = continuation_in_eps(
        3, 6.0, sine_spec, (0.5,), 0.5, 3.0, (2.0, 12.0), trunc_K=3.0)
    assert res.completed, res.failure
    return res
