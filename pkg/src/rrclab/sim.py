"""Deterministic hybrid simulation of the controlled two-inertia plant.

Continuous dynamics are integrated with fixed-step RK4 (``substeps`` per
control period) while the discrete controller runs at the control period
with zero-order-hold output, hard force saturation and optional
floor-to-grid encoder quantization.  Runs are pure functions of their
configuration: identical inputs give bit-identical trajectories.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .controllers import VARIANT_CODES, ControllerConfig
from .plant import PlantParams
from .synthesis import FeedbackGains

CSV_HEADER = "t,x_m,v_m,x_l,v_l,x_r,cmd,u_fb,F_hat,F_applied,dist_m,dist_l"

DIVERGENCE_LIMIT = 10.0  # m; rig stroke is centimetres, 10 m is blow-up


@dataclass(frozen=True)
class SimConfig:
    """Timing, actuator and sensor constraints of the simulation."""

    control_period: float = 1e-4   # s
    substeps: int = 10             # RK4 steps per control period
    duration: float = 2.0          # s
    actuator_limit: float = 80.0   # N
    encoder_resolution: float = 50e-9  # m
    quantization_enabled: bool = True

    def __post_init__(self):
        if self.control_period <= 0 or self.duration <= 0:
            raise ValueError("control_period and duration must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.actuator_limit <= 0:
            raise ValueError("actuator_limit must be positive")
        if self.encoder_resolution <= 0:
            raise ValueError("encoder_resolution must be positive")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.control_period))


@dataclass(frozen=True)
class CommandProfile:
    """Position command fed to both position inputs of the state feedback.

    kinds: ``zero``; ``step`` (height at t0, zero velocity command);
    ``chirp`` (amplitude, f0 -> f1 linear sweep over sweep_time starting
    at t0, velocity command = analytic derivative, holds the final value
    after the sweep).
    """

    kind: str = "zero"
    t0: float = 0.0
    height: float = 0.0
    amplitude: float = 0.0
    f0: float = 0.0
    f1: float = 0.0
    sweep_time: float = 0.0

    @staticmethod
    def zero() -> "CommandProfile":
        return CommandProfile()

    @staticmethod
    def step(height: float, t0: float = 0.1) -> "CommandProfile":
        return CommandProfile(kind="step", t0=t0, height=height)

    @staticmethod
    def chirp(amplitude: float, f0: float, f1: float, sweep_time: float,
              t0: float = 0.5) -> "CommandProfile":
        if not (0 < f0 < f1):
            raise ValueError("need 0 < f0 < f1")
        if sweep_time <= 0:
            raise ValueError("sweep_time must be positive")
        return CommandProfile(kind="chirp", t0=t0, amplitude=amplitude,
                              f0=f0, f1=f1, sweep_time=sweep_time)

    def sample(self, n_ticks: int, period: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and velocity commands at every control tick.

        Commands are pre-sampled in vectorized numpy so the simulation
        kernel stays trigonometry-free (and backend-independent).
        """
        t = np.arange(n_ticks) * period
        pos = np.zeros(n_ticks)
        vel = np.zeros(n_ticks)
        if self.kind == "zero":
            pass
        elif self.kind == "step":
            pos[t >= self.t0] = self.height
        elif self.kind == "chirp":
            tau = np.clip(t - self.t0, 0.0, self.sweep_time)
            rate = (self.f1 - self.f0) / self.sweep_time
            phase = 2.0 * np.pi * (self.f0 * tau + 0.5 * rate * tau ** 2)
            pos = self.amplitude * np.sin(phase)
            pos[t < self.t0] = 0.0
            vel = (self.amplitude * np.cos(phase) * 2.0 * np.pi
                   * (self.f0 + rate * tau))
            vel[(t < self.t0) | (t > self.t0 + self.sweep_time)] = 0.0
        else:
            raise ValueError(f"unknown command kind {self.kind!r}")
        return pos, vel


@dataclass(frozen=True)
class DisturbanceSegment:
    """One disturbance segment, constant or sinusoidal, on [t0, t1)."""

    t0: float
    t1: float
    value: float = 0.0        # N, constant segments
    frequency: float = 0.0    # Hz, sinusoidal segments
    phase: float = 0.0        # rad
    kind: str = "const"

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("segment needs t1 > t0")
        if self.kind not in ("const", "sine"):
            raise ValueError(f"unknown segment kind {self.kind!r}")


@dataclass(frozen=True)
class DisturbanceSchedule:
    """Non-overlapping segments for the motor and load disturbance forces."""

    motor: tuple[DisturbanceSegment, ...] = ()
    load: tuple[DisturbanceSegment, ...] = ()

    def __post_init__(self):
        for segs in (self.motor, self.load):
            times = sorted((s.t0, s.t1) for s in segs)
            for (a0, a1), (b0, _) in zip(times, times[1:]):
                if b0 < a1:
                    raise ValueError("disturbance segments overlap")

    @staticmethod
    def constant(motor: float = 0.0, load: float = 0.0,
                 t0: float = 0.0, t1: float = math.inf) -> "DisturbanceSchedule":
        motor_segs = (DisturbanceSegment(t0, t1, value=motor),) if motor else ()
        load_segs = (DisturbanceSegment(t0, t1, value=load),) if load else ()
        return DisturbanceSchedule(motor_segs, load_segs)

    @staticmethod
    def _encode(segs: tuple[DisturbanceSegment, ...]) -> np.ndarray:
        arr = np.zeros((len(segs), 6))
        for i, s in enumerate(segs):
            arr[i] = (_kernels.SEG_SINE if s.kind == "sine" else _kernels.SEG_CONST,
                      s.t0, s.t1, s.value, s.frequency, s.phase)
        return arr


@dataclass(frozen=True)
class Scenario:
    """Command, disturbances, feedforward force and initial condition."""

    command: CommandProfile = field(default_factory=CommandProfile.zero)
    disturbances: DisturbanceSchedule = field(default_factory=DisturbanceSchedule)
    force_feedforward: np.ndarray | None = None  # per-tick, N
    initial_state: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


class Trajectory:
    """Uniformly sampled record of one simulation run."""

    _COLS = CSV_HEADER.split(",")

    def __init__(self, data: np.ndarray, control_period: float,
                 diverged: bool, diverged_at: float | None):
        if data.ndim != 2 or data.shape[1] != _kernels.N_COLUMNS:
            raise ValueError("trajectory array has wrong shape")
        self.data = data
        self.control_period = control_period
        self.diverged = diverged
        self.diverged_at = diverged_at

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getattr__(self, name: str):
        try:
            idx = self._COLS.index(name)
        except ValueError:
            raise AttributeError(name) from None
        return self.data[:, idx]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self._COLS.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)

    def write_csv(self, fh: io.TextIOBase) -> None:
        fh.write(CSV_HEADER + "\n")
        np.savetxt(fh, self.data, fmt="%.9g", delimiter=",", newline="\n")

    @staticmethod
    def from_csv(path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        period = data[1, 0] - data[0, 0] if data.shape[0] > 1 else 0.0
        return Trajectory(data, period, diverged=False, diverged_at=None)


def run_simulation(plant: PlantParams, ctrl: ControllerConfig,
                   gains: FeedbackGains, scenario: Scenario,
                   sim: SimConfig) -> Trajectory:
    """Run the hybrid loop; divergence is a recorded outcome, not an error."""
    n_ticks = sim.n_ticks
    if n_ticks < 1:
        raise ValueError("duration shorter than one control period")
    if ctrl.dob_cutoff * sim.control_period >= 2.0 \
            or ctrl.diff_cutoff * sim.control_period >= 2.0:
        raise ValueError("filter cutoff violates g*Ts < 2")

    cmd_pos, cmd_vel = scenario.command.sample(n_ticks, sim.control_period)
    ff = scenario.force_feedforward
    if ff is None:
        ff = np.zeros(0)
    else:
        ff = np.ascontiguousarray(ff, dtype=np.float64)
        if ff.shape != (n_ticks,):
            raise ValueError(
                f"force_feedforward must have one entry per tick "
                f"({n_ticks}), got {ff.shape}")
    state0 = np.asarray(scenario.initial_state, dtype=np.float64)

    out, n_done, diverged = _kernels.hybrid_loop(
        plant.motor_mass, plant.load_mass, plant.spring_coeff,
        plant.viscous_damping_motor, plant.viscous_damping_load,
        VARIANT_CODES[ctrl.variant], ctrl.ratio, ctrl.dob_cutoff,
        ctrl.diff_cutoff, ctrl.nominal_motor_mass,
        gains.k_pm, gains.k_dm, gains.k_pl, gains.k_dl,
        sim.control_period, sim.substeps, n_ticks,
        sim.actuator_limit, sim.encoder_resolution,
        1 if sim.quantization_enabled else 0,
        cmd_pos, cmd_vel, ff,
        DisturbanceSchedule._encode(scenario.disturbances.motor),
        DisturbanceSchedule._encode(scenario.disturbances.load),
        state0, DIVERGENCE_LIMIT)

    diverged_at = n_done * sim.control_period if diverged else None
    return Trajectory(out[:n_done].copy(), sim.control_period,
                      bool(diverged), diverged_at)


def energy(x_r: float | np.ndarray, v_m: float | np.ndarray,
           v_l: float | np.ndarray, params: PlantParams):
    """Mechanical energy: kinetic of both masses plus spring potential."""
    return (0.5 * params.motor_mass * v_m ** 2
            + 0.5 * params.load_mass * v_l ** 2
            + 0.5 * params.spring_coeff * x_r ** 2)


def trajectory_energy(traj: Trajectory, params: PlantParams) -> np.ndarray:
    return energy(traj.x_r, traj.v_m, traj.v_l, params)
