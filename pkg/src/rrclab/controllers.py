"""Discrete-time controller blocks: pseudo-differentiator, disturbance
observer, ratio control laws and PD state feedback.

All first-order filters are discretized with the bilinear (trapezoidal)
transform, which preserves DC gain exactly and is stable for g*Ts < 2.
Everything here is the slow reference implementation used by unit tests;
the simulation kernel in :mod:`rrclab._kernels` inlines identical
arithmetic for speed and the two are held bit-equal by tests.

Tick protocol (must match the kernel):
  1. update pseudo-differentiators with this tick's measurements
  2. evaluate state feedback -> u_fb
  3. evaluate the ratio-control law -> unsaturated force
  4. clamp externally, then report the applied force back via
     ``record_applied`` (the observer consumes the saturated value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .synthesis import FeedbackGains

Variant = Literal["conventional_rrc", "proposed_rrc", "state_feedback_only"]

VARIANT_CODES = {"conventional_rrc": 0, "proposed_rrc": 1, "state_feedback_only": 2}


@dataclass(frozen=True)
class ControllerConfig:
    """Everything the discrete controller needs besides the gains."""

    variant: Variant
    ratio: float          # resonance ratio gain K
    dob_cutoff: float     # g_d [rad/s]
    diff_cutoff: float    # g_l [rad/s]
    pole: float           # alpha [rad/s], for gain synthesis reports
    nominal_motor_mass: float  # M_mn [kg], possibly mismatched

    def __post_init__(self):
        if self.variant not in VARIANT_CODES:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.ratio <= 0:
            raise ValueError("ratio must be positive")
        if min(self.dob_cutoff, self.diff_cutoff, self.pole) <= 0:
            raise ValueError("cutoffs and pole must be positive")
        if self.nominal_motor_mass <= 0:
            raise ValueError("nominal motor mass must be positive")

    def with_nominal_mass(self, m: float) -> "ControllerConfig":
        return ControllerConfig(self.variant, self.ratio, self.dob_cutoff,
                                self.diff_cutoff, self.pole, m)

    def with_dob_cutoff(self, g: float) -> "ControllerConfig":
        return ControllerConfig(self.variant, self.ratio, g,
                                self.diff_cutoff, self.pole,
                                self.nominal_motor_mass)


class LowPass:
    """First-order low pass g/(s+g), bilinear discretization.

    y[k] = a*y[k-1] + b*(u[k] + u[k-1]),
    a = (2 - g*Ts)/(2 + g*Ts),  b = g*Ts/(2 + g*Ts).
    """

    def __init__(self, cutoff: float, period: float):
        if cutoff <= 0 or period <= 0:
            raise ValueError("cutoff and period must be positive")
        if cutoff * period >= 2.0:
            raise ValueError(
                f"cutoff*period = {cutoff * period!r} violates the "
                "discretization validity bound g*Ts < 2")
        self.cutoff = cutoff
        self.period = period
        den = 2.0 + cutoff * period
        self._a = (2.0 - cutoff * period) / den
        self._b = cutoff * period / den
        self.y = 0.0
        self.u_prev = 0.0

    def update(self, u: float) -> float:
        self.y = self._a * self.y + self._b * (u + self.u_prev)
        self.u_prev = u
        return self.y

    def reset(self) -> None:
        self.y = 0.0
        self.u_prev = 0.0


class PseudoDifferentiator:
    """Band-limited derivative g*s/(s+g), realized as g*(x - lowpass(x))."""

    def __init__(self, cutoff: float, period: float):
        self._lpf = LowPass(cutoff, period)
        self.cutoff = cutoff

    def update(self, sample: float) -> float:
        return self.cutoff * (sample - self._lpf.update(sample))

    def reset(self) -> None:
        self._lpf.reset()


def pseudo_derivative(filter: PseudoDifferentiator, sample: float) -> float:
    """Advance the differentiator one tick and return the rate estimate."""
    return filter.update(sample)


def state_feedback(cmd_pos: float, cmd_vel: float,
                   meas_x_m: float, meas_v_m: float,
                   meas_x_l: float, meas_v_l: float,
                   gains: FeedbackGains) -> float:
    """PD feedback on motor and load errors; u = -f*x in the regulator case."""
    return (gains.k_pm * (cmd_pos - meas_x_m)
            + gains.k_dm * (cmd_vel - meas_v_m)
            + gains.k_pl * (cmd_pos - meas_x_l)
            + gains.k_dl * (cmd_vel - meas_v_l))


class DisturbanceObserver:
    """First-order DOB without explicit double differentiation.

    Estimates F_hat = L_d(s) * (F_applied - M_n * s^2 * x) where the
    improper M_n*s^2*L_d(x) part is recomposed through a pseudo-
    differentiated velocity v = g_l*s/(s+g_l) * x:

        F_hat = L_d(F + g_d*M_n*v) - g_d*M_n*v

    so only first-order filters ever touch position or force.  The force
    input is the previous tick's *applied* (saturated) value, which makes
    the observer self-consistent under actuator clamping.
    """

    def __init__(self, cutoff: float, diff_cutoff: float,
                 nominal_mass: float, period: float):
        self._lpf = LowPass(cutoff, period)
        self._diff = PseudoDifferentiator(diff_cutoff, period)
        self._gain = cutoff * nominal_mass
        self.estimate = 0.0

    def update(self, position: float, force_prev: float) -> float:
        v = self._diff.update(position)
        z = force_prev + self._gain * v
        self.estimate = self._lpf.update(z) - self._gain * v
        return self.estimate


class _RatioControlBase:
    """Shared machinery of the two ratio-control laws."""

    def __init__(self, cfg: ControllerConfig, period: float):
        self.cfg = cfg
        self._dob = DisturbanceObserver(cfg.dob_cutoff, cfg.diff_cutoff,
                                        cfg.nominal_motor_mass, period)
        self.force_prev = 0.0
        self.estimate = 0.0

    def _force(self, u_fb: float, dob_input: float) -> float:
        self.estimate = self._dob.update(dob_input, self.force_prev)
        return self.cfg.ratio * u_fb + (1.0 - self.cfg.ratio) * self.estimate

    def record_applied(self, force: float) -> None:
        """Feed back the saturated force actually sent to the actuator."""
        self.force_prev = force


class ConventionalRrc(_RatioControlBase):
    """Motor-side-DOB ratio control: observes the absolute motor position."""

    def __init__(self, cfg: ControllerConfig, period: float):
        if cfg.variant != "conventional_rrc":
            raise ValueError("config variant mismatch")
        super().__init__(cfg, period)

    def force(self, u_fb: float, x_m: float) -> float:
        return self._force(u_fb, x_m)


class ProposedRrc(_RatioControlBase):
    """Relative-position ratio control.

    Consumes only the relative position x_r and the nominal motor mass;
    absolute positions are deliberately absent from the interface.
    """

    def __init__(self, cfg: ControllerConfig, period: float):
        if cfg.variant != "proposed_rrc":
            raise ValueError("config variant mismatch")
        super().__init__(cfg, period)

    def force(self, u_fb: float, x_r: float) -> float:
        return self._force(u_fb, x_r)


def conventional_rrc_force(ctrl: ConventionalRrc, u_fb: float, x_m: float) -> float:
    """One tick of the motor-side-DOB law; clamp and record_applied after."""
    return ctrl.force(u_fb, x_m)


def proposed_rrc_force(ctrl: ProposedRrc, u_fb: float, x_r: float) -> float:
    """One tick of the relative-position law; clamp and record_applied after."""
    return ctrl.force(u_fb, x_r)


def quantize_floor(value: float, resolution: float) -> float:
    """Absolute-encoder reading: floor to the resolution grid."""
    return math.floor(value / resolution) * resolution
