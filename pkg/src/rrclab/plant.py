"""Two-inertia plant model: continuous dynamics and frequency-domain views.

The plant is a motor mass and a load mass coupled by a linear spring:

    Mm * x_m'' = -Ks*(x_m - x_l) + F - F_m_dis - c_m*x_m'
    Ml * x_l'' =  Ks*(x_m - x_l)     - F_l_dis - c_l*x_l'

Forces are in newtons, positions in metres.  Viscous damping terms
default to zero; the experimental rigs this models are nearly undamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_POLE_GUARD = 1e-9  # relative guard band around the undamped resonance


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the two-inertia system."""

    motor_mass: float   # Mm [kg]
    load_mass: float    # Ml [kg]
    spring_coeff: float  # Ks [N/m]
    force_coeff: float = 33.0  # Kt [N/A], current-to-force scaling only
    viscous_damping_motor: float = 0.0  # c_m [N·s/m]
    viscous_damping_load: float = 0.0   # c_l [N·s/m]

    def __post_init__(self):
        if not (self.motor_mass > 0 and self.load_mass > 0):
            raise ValueError("masses must be positive")
        if not self.spring_coeff > 0:
            raise ValueError("spring_coeff must be positive")
        if not self.force_coeff > 0:
            raise ValueError("force_coeff must be positive")
        if self.viscous_damping_motor < 0 or self.viscous_damping_load < 0:
            raise ValueError("damping must be non-negative")

    @property
    def total_mass(self) -> float:
        return self.motor_mass + self.load_mass


@dataclass
class PlantState:
    """Positions and velocities of both masses."""

    x_m: float = 0.0
    v_m: float = 0.0
    x_l: float = 0.0
    v_l: float = 0.0

    def __post_init__(self):
        for name in ("x_m", "v_m", "x_l", "v_l"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite state component {name}")

    @property
    def x_r(self) -> float:
        """Relative position x_m - x_l (derived, never stored)."""
        return self.x_m - self.x_l

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_m, self.v_m, self.x_l, self.v_l)


@dataclass(frozen=True)
class CharacteristicFreqs:
    """Resonance and antiresonance frequencies of the plant."""

    omega_p: float  # rad/s
    omega_z: float  # rad/s
    f_p: float = field(init=False)
    f_z: float = field(init=False)

    def __post_init__(self):
        if not (self.omega_p > self.omega_z > 0):
            raise ValueError("expected omega_p > omega_z > 0")
        object.__setattr__(self, "f_p", self.omega_p / (2.0 * math.pi))
        object.__setattr__(self, "f_z", self.omega_z / (2.0 * math.pi))


def plant_derivative(state: PlantState, force_in: float, dist_m: float,
                     dist_l: float, params: PlantParams) -> PlantState:
    """Time derivative of the plant state under the given forces.

    Returned object reuses PlantState as a value container:
    (v_m, a_m, v_l, a_l).
    """
    for name, val in (("force_in", force_in), ("dist_m", dist_m), ("dist_l", dist_l)):
        if not math.isfinite(val):
            raise ValueError(f"non-finite input {name}={val!r}")
    spring = params.spring_coeff * state.x_r
    a_m = (-spring + force_in - dist_m
           - params.viscous_damping_motor * state.v_m) / params.motor_mass
    a_l = (spring - dist_l
           - params.viscous_damping_load * state.v_l) / params.load_mass
    return PlantState(state.v_m, a_m, state.v_l, a_l)


def characteristic_freqs(params: PlantParams) -> CharacteristicFreqs:
    """Resonance omega_p = sqrt(Ks*(1/Mm + 1/Ml)) and antiresonance sqrt(Ks/Ml)."""
    omega_p = math.sqrt(params.spring_coeff
                        * (1.0 / params.motor_mass + 1.0 / params.load_mass))
    omega_z = math.sqrt(params.spring_coeff / params.load_mass)
    return CharacteristicFreqs(omega_p, omega_z)


def frequency_response(params: PlantParams, channel: str, omega: float) -> complex:
    """Undamped force-to-position transfer evaluated at s = j*omega.

    channel: ``motor`` (x_m/F), ``load`` (x_l/F) or ``relative`` (x_r/F).
    Evaluation inside a narrow guard band around the undamped resonance is
    rejected: the magnitude there is a floating-point artifact.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    freqs = characteristic_freqs(params)
    if abs(omega - freqs.omega_p) / freqs.omega_p < _POLE_GUARD:
        raise ValueError(
            f"omega={omega!r} lies within the guard band of the undamped "
            f"resonance at {freqs.omega_p!r} rad/s")
    s = 1j * omega
    s2 = s * s
    den = params.motor_mass * (s2 + freqs.omega_p ** 2)
    if channel == "relative":
        return 1.0 / den
    if channel == "motor":
        return (s2 + freqs.omega_z ** 2) / (s2 * den)
    if channel == "load":
        return freqs.omega_z ** 2 / (s2 * den)
    raise ValueError(f"unknown channel {channel!r}")
