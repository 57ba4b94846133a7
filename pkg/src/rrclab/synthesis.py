"""Closed-form controller design for the two RRC variants.

Ratio control with gain K makes the motor appear K times lighter.  The
relative-position variant redistributes mass so the total is conserved
and the load-side stiffness ratio Ks/Ml is untouched; the motor-side-DOB
variant simply divides the motor mass.  State-feedback gains place a
quadruple closed-loop pole at -alpha on the modified system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .plant import PlantParams, characteristic_freqs


@dataclass(frozen=True)
class ModifiedParams:
    """Apparent plant constants under ratio control."""

    motor_mass: float   # Mm' [kg]
    load_mass: float    # Ml' [kg]
    spring_coeff: float  # Ks' [N/m]
    omega_p: float      # modified resonance [rad/s]

    def __post_init__(self):
        if min(self.motor_mass, self.load_mass, self.spring_coeff, self.omega_p) <= 0:
            raise ValueError("modified parameters must be positive")

    @property
    def f_p(self) -> float:
        return self.omega_p / (2.0 * math.pi)


@dataclass(frozen=True)
class FeedbackGains:
    """Proportional/derivative gains on motor and load position errors."""

    k_pm: float  # N/m
    k_dm: float  # N·s/m
    k_pl: float  # N/m
    k_dl: float  # N·s/m

    def __post_init__(self):
        for g in (self.k_pm, self.k_dm, self.k_pl, self.k_dl):
            if not math.isfinite(g):
                raise ValueError("gains must be finite")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.k_pm, self.k_dm, self.k_pl, self.k_dl)


@dataclass(frozen=True)
class ClosedLoopCoeffs:
    """Monic quartic denominator s^4 + a3 s^3 + a2 s^2 + a1 s + a0."""

    numerator_gain: float
    a3: float
    a2: float
    a1: float
    a0: float

    def coeffs(self) -> tuple[float, float, float, float]:
        return (self.a3, self.a2, self.a1, self.a0)


def _ratio_lower_bound(params: PlantParams) -> float:
    return params.motor_mass / params.total_mass


def modified_params(params: PlantParams, ratio: float) -> ModifiedParams:
    """Apparent system under relative-position ratio control.

    Mm' = Mm/K, Ml' = (K(Mm+Ml)-Mm)/K, Ks' = Ml'/Ml * Ks and the
    resonance rises to sqrt(K)*omega_p.  K must exceed Mm/(Mm+Ml) or the
    redistributed load mass would be non-physical.
    """
    bound = _ratio_lower_bound(params)
    if ratio <= bound:
        raise ValueError(
            f"resonance ratio gain {ratio!r} yields non-physical modified "
            f"load mass; require K > Mm/(Mm+Ml) = {bound!r}")
    mm = params.motor_mass / ratio
    ml = (ratio * params.total_mass - params.motor_mass) / ratio
    ks = ml / params.load_mass * params.spring_coeff
    omega_p = math.sqrt(ratio) * characteristic_freqs(params).omega_p
    return ModifiedParams(mm, ml, ks, omega_p)


def conventional_modified_params(params: PlantParams, ratio: float) -> ModifiedParams:
    """Apparent system under motor-side-DOB ratio control.

    Only the motor mass is scaled (Mm' = Mm/K); load mass and spring are
    physical, so the resonance becomes sqrt(Ks*(K/Mm + 1/Ml)).
    """
    if ratio <= 0:
        raise ValueError("resonance ratio gain must be positive")
    mm = params.motor_mass / ratio
    omega_p = math.sqrt(params.spring_coeff
                        * (1.0 / mm + 1.0 / params.load_mass))
    return ModifiedParams(mm, params.load_mass, params.spring_coeff, omega_p)


def _place_quadruple(mm: float, ml: float, ks: float, alpha: float) -> FeedbackGains:
    """Gains that put all four closed-loop poles of a two-inertia plant
    (mm, ml, ks) with full PD state feedback at -alpha."""
    k_dm = 4.0 * alpha * mm
    k_pm = 6.0 * alpha ** 2 * mm - ks - ks * mm / ml
    k_dl = 4.0 * alpha ** 3 * mm * ml / ks - k_dm
    k_pl = alpha ** 4 * mm * ml / ks - k_pm
    return FeedbackGains(k_pm, k_dm, k_pl, k_dl)


def _warn_if_degenerate(gains: FeedbackGains) -> None:
    if gains.k_pm <= 0 or gains.k_pl <= 0:
        warnings.warn(
            "non-positive proportional gain (k_pm={:.4g}, k_pl={:.4g}); "
            "the pole choice is aggressive for this plant".format(
                gains.k_pm, gains.k_pl),
            stacklevel=3)


def quadruple_pole_gains(params: PlantParams, ratio: float,
                         alpha: float) -> FeedbackGains:
    """State-feedback gains for the relative-position variant.

    Closed forms expressed in the physical constants:

        k_pm = (6 a^2 Mm Ml - K Ks (Mm+Ml)) / (K Ml)
        k_pl = (Mm (a^4 Ml^2 - 6 a^2 Ks Ml) + K Ks^2 (Mm+Ml)) / (K Ml Ks)
        k_dm = 4 a Mm / K
        k_dl = Mm (4 a^3 Ml - 4 a Ks) / (K Ks)

    Equivalent to :func:`_place_quadruple` on the modified system.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    modified_params(params, ratio)  # validates the ratio bound
    mm, ml, ks = params.motor_mass, params.load_mass, params.spring_coeff
    k_pm = (6.0 * alpha ** 2 * mm * ml - ratio * ks * (mm + ml)) / (ratio * ml)
    k_pl = (mm * (alpha ** 4 * ml ** 2 - 6.0 * alpha ** 2 * ks * ml)
            + ratio * ks ** 2 * (mm + ml)) / (ratio * ml * ks)
    k_dm = 4.0 * alpha * mm / ratio
    k_dl = mm * (4.0 * alpha ** 3 * ml - 4.0 * alpha * ks) / (ratio * ks)
    gains = FeedbackGains(k_pm, k_dm, k_pl, k_dl)
    _warn_if_degenerate(gains)
    return gains


def conventional_quadruple_pole_gains(params: PlantParams, ratio: float,
                                      alpha: float) -> FeedbackGains:
    """State-feedback gains for the motor-side-DOB variant.

    The apparent plant is (Mm/K, Ml, Ks), so the quadruple pole must be
    placed on that system; reusing the relative-variant closed forms with
    this K would misplace the s^2 coefficient.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    mod = conventional_modified_params(params, ratio)
    gains = _place_quadruple(mod.motor_mass, mod.load_mass,
                             mod.spring_coeff, alpha)
    _warn_if_degenerate(gains)
    return gains


def closed_loop_coeffs(params: PlantParams, ratio: float,
                       gains: FeedbackGains) -> ClosedLoopCoeffs:
    """Force-reference-to-load-position transfer of the ratio-controlled
    loop with state feedback (relative-position variant)."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    mm, ml, ks = params.motor_mass, params.load_mass, params.spring_coeff
    num = ratio ** 2 * ks / (mm * ml)
    a3 = ratio * gains.k_dm / mm
    a2 = ratio * (ks * mm + ml * (ks + gains.k_pm)) / (mm * ml)
    a1 = ratio * ks * (gains.k_dm + gains.k_dl) / (mm * ml)
    a0 = ratio * ks * (gains.k_pm + gains.k_pl) / (mm * ml)
    return ClosedLoopCoeffs(num, a3, a2, a1, a0)


def routh_stable(coeffs: ClosedLoopCoeffs) -> bool:
    """Strict Hurwitz test for the monic quartic (all roots in Re(s) < 0)."""
    a3, a2, a1, a0 = coeffs.coeffs()
    if min(a3, a2, a1, a0) <= 0:
        return False
    b1 = a2 - a1 / a3          # second Routh row pivot (scaled)
    if b1 <= 0:
        return False
    c1 = a1 - a3 * a0 / b1
    return c1 > 0


def closed_loop_poles(params: PlantParams, ratio: float,
                      gains: FeedbackGains) -> np.ndarray:
    """Roots of the closed-loop quartic, for design reports."""
    c = closed_loop_coeffs(params, ratio, gains)
    return np.roots([1.0, c.a3, c.a2, c.a1, c.a0])
