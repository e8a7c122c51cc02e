import numpy as np
import pytest

import erwlab as E

# keep hypothesis-driven simulation tests snappy; acceptance covers scale
pytest_plugins = ()


@pytest.fixture(scope="session")
def fig1_stack():
    return E.make_periodic([0.7, 0.3])


@pytest.fixture(scope="session")
def fig1_params(fig1_stack):
    return E.compute_params(fig1_stack)


@pytest.fixture(scope="session")
def fair_stack():
    return E.make_periodic([0.5])


@pytest.fixture(scope="session")
def fig3_markov():
    return E.MarkovStack(states=(0.7, 0.3),
                         transition=((0.75, 0.25), (0.25, 0.75)),
                         initial=0, seed=2024)


@pytest.fixture(scope="session")
def small_record(fig1_stack):
    return E.simulate_walk(fig1_stack, 20_000, seed=424242)
