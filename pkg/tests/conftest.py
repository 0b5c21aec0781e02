import numpy as np
import pytest

from packcharge.params import load_default_module, initial_cell_state


@pytest.fixture(scope="session")
def module2():
    """Default two-cell NMC/graphite module at 25 C."""
    return load_default_module()


@pytest.fixture(scope="session")
def cell0(module2):
    return module2.cells[0]


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)


def rested(cell, soc, t=298.15, l_sei=5e-9, hf=False):
    return initial_cell_state(cell, soc, t, l_sei=l_sei, high_fidelity=hf)
