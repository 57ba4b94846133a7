import warnings

import pytest

from rrclab import SimConfig, run_simulation, table1
from rrclab.experiments import standard_controllers
from rrclab.sim import CommandProfile, Scenario

warnings.filterwarnings(
    "ignore", message="non-positive proportional gain")


@pytest.fixture(scope="session")
def plant1():
    return table1()


@pytest.fixture(scope="session")
def controllers1(plant1):
    return standard_controllers(plant1)


@pytest.fixture(scope="session", autouse=True)
def warm_kernel(plant1, controllers1):
    """Trigger JIT compilation once so timed tests see warm runs."""
    cfg, gains = controllers1["proposed_rrc"]
    run_simulation(plant1, cfg, gains,
                   Scenario(command=CommandProfile.step(1e-3)),
                   SimConfig(duration=2e-3))
