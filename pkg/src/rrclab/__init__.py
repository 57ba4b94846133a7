"""rrclab: simulation laboratory for resonance ratio control of
two-inertia positioning systems.

Set ``RRCLAB_NUMBA=0`` to run the simulation kernel as plain Python
(useful where numba is unavailable; results are bit-identical).
"""

from ._kernels import NUMBA_AVAILABLE, USING_NUMBA
from .controllers import ControllerConfig
from .plant import CharacteristicFreqs, PlantParams, PlantState, characteristic_freqs, frequency_response, plant_derivative
from .presets import design_gains, table1, table2, table3, table4
from .sim import (CommandProfile, DisturbanceSchedule, DisturbanceSegment,
                  Scenario, SimConfig, Trajectory, energy, run_simulation)
from .synthesis import (ClosedLoopCoeffs, FeedbackGains, ModifiedParams,
                        closed_loop_coeffs, conventional_modified_params,
                        conventional_quadruple_pole_gains, modified_params,
                        quadruple_pole_gains, routh_stable)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_AVAILABLE", "USING_NUMBA", "__version__",
    "PlantParams", "PlantState", "CharacteristicFreqs",
    "plant_derivative", "characteristic_freqs", "frequency_response",
    "ModifiedParams", "FeedbackGains", "ClosedLoopCoeffs",
    "modified_params", "conventional_modified_params",
    "quadruple_pole_gains", "conventional_quadruple_pole_gains",
    "closed_loop_coeffs", "routh_stable",
    "ControllerConfig", "SimConfig", "CommandProfile",
    "DisturbanceSchedule", "DisturbanceSegment", "Scenario", "Trajectory",
    "run_simulation", "energy",
    "table1", "table2", "table3", "table4", "design_gains",
]
