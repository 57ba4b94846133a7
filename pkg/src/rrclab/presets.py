"""Named parameter sets for the reference rig.

``table1``/``table2`` are the identified plant constants without and
with the extra load weight; ``table3``/``table4`` are the motor-side-DOB
(conventional) and relative-position (proposed) controller settings used
throughout the experiment reproductions.
"""

from __future__ import annotations

from .controllers import ControllerConfig
from .plant import PlantParams
from .synthesis import (FeedbackGains, conventional_quadruple_pole_gains,
                        quadruple_pole_gains)


def table1() -> PlantParams:
    """Rig without the extra weight (f_p ~ 14.4 Hz, f_z ~ 10.4 Hz)."""
    return PlantParams(motor_mass=1.20, load_mass=1.09,
                       spring_coeff=4662.0, force_coeff=33.0)


def table2() -> PlantParams:
    """Rig with the extra weight (f_p ~ 13.3 Hz, f_z ~ 8.85 Hz)."""
    return PlantParams(motor_mass=1.26, load_mass=1.59,
                       spring_coeff=4917.0, force_coeff=33.0)


def table3(plant: PlantParams | None = None) -> ControllerConfig:
    """Conventional (motor-side DOB) controller settings."""
    plant = plant or table1()
    return ControllerConfig(variant="conventional_rrc", ratio=4.40,
                            dob_cutoff=100.0, diff_cutoff=3000.0,
                            pole=90.0, nominal_motor_mass=plant.motor_mass)


def table4(plant: PlantParams | None = None) -> ControllerConfig:
    """Proposed (relative position) controller settings."""
    plant = plant or table1()
    return ControllerConfig(variant="proposed_rrc", ratio=2.62,
                            dob_cutoff=500.0, diff_cutoff=3000.0,
                            pole=90.0, nominal_motor_mass=plant.motor_mass)


PLANT_PRESETS = {"table1": table1, "table2": table2}
CONTROLLER_PRESETS = {"table3": table3, "table4": table4}


def design_gains(plant: PlantParams, cfg: ControllerConfig) -> FeedbackGains:
    """Quadruple-pole gains appropriate to the controller variant."""
    if cfg.variant == "conventional_rrc":
        return conventional_quadruple_pole_gains(plant, cfg.ratio, cfg.pole)
    return quadruple_pole_gains(plant, cfg.ratio, cfg.pole)
