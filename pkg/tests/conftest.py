import pytest

from polsqz.figures import builtin_params
from polsqz.steady import Stability, linear_branch_states


def stable_linear(params):
    states = [s for s in linear_branch_states(params.delta_c, params.s_max, params)
              if s.stability is Stability.STABLE]
    assert states, "expected a stable linear working point"
    return states[0]


@pytest.fixture(scope="session")
def fig7_params():
    return builtin_params("fig7")


@pytest.fixture(scope="session")
def fig7_state(fig7_params):
    return stable_linear(fig7_params)


@pytest.fixture(scope="session")
def fig3_params():
    return builtin_params("fig3")
