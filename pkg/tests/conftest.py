import numpy as np
import pytest

from fsmacwt.channel_models import GaussianFadingChannel, PowerBudget
from fsmacwt.markov_state import build_gilbert_elliott, gilbert_elliott_from_memory


def sweep_channel(sigma_b2=2.0, chain_states=("G", "B")):
    """Gains and variances of the delay-sweep experiments (sigma_B^2 chosen by the caller)."""
    return GaussianFadingChannel(chain_states, [1.0, 0.5], [1.0, 0.7], [0.8, 0.2], [1.0, sigma_b2], 400.0)


def region_channel(sigma_w2, sigma_b2=2.0):
    """Gains and variances of the region experiments."""
    return GaussianFadingChannel(("G", "B"), [1.0, 0.5], [1.0, 0.7], [1.0, 0.9], [1.0, sigma_b2], sigma_w2)


@pytest.fixture
def ge_sym():
    return build_gilbert_elliott(0.05, 0.05)


@pytest.fixture
def sweep_chain():
    return gilbert_elliott_from_memory(0.9, 1.0)


@pytest.fixture
def budget100():
    return PowerBudget(100.0, 100.0)


def random_gaussian(rng, k=2, h3=None):
    states = tuple(f"s{i}" for i in range(k))
    h3 = rng.uniform(0, 2, k) if h3 is None else h3
    return GaussianFadingChannel(states, rng.uniform(0, 2, k), rng.uniform(0, 2, k), h3,
                                 rng.uniform(0.5, 10, k), float(rng.uniform(0.5, 10)))


def random_chain(rng, k=2):
    from fsmacwt.markov_state import MarkovChain

    K = rng.dirichlet(np.ones(k), size=k).T
    K = 0.9 * K + 0.1 / k
    return MarkovChain(tuple(f"s{i}" for i in range(k)), K / K.sum(axis=0))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
