"""Scenario harness: step/mismatch/load-weight/chirp reproductions and the
PRBS identification pipeline with trajectory metrics.

Scenario defaults are calibrated once against this package's own
simulator and then frozen; every experiment is a pure function of its
configuration, so metrics reproduce bit-exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .controllers import ControllerConfig
from .plant import PlantParams
from .presets import design_gains, table1, table2, table3, table4
from .sim import (CommandProfile, DisturbanceSchedule, DisturbanceSegment,
                  Scenario, SimConfig, Trajectory, run_simulation)
from .synthesis import FeedbackGains

# 2%-settling abscissa of the quadruple-pole step response:
# exp(-x)*(1 + x + x^2/2 + x^3/6) = 0.02
SETTLING_CONSTANT = 9.084115382412808

STEP_HEIGHT = 5e-3      # m
STEP_TIME = 0.1         # s
STEP_DURATION = 2.0     # s
OSC_WINDOW_FACTOR = 3.0  # window starts this many nominal settling times in

CHIRP_AMPLITUDE = 2.5e-4  # m, keeps nominal forces inside +-80 N up to 30 Hz
CHIRP_F0 = 0.5            # Hz
CHIRP_F1 = 30.0           # Hz
CHIRP_SWEEP_TIME = 10.0   # s
CHIRP_START = 0.5         # s
CHIRP_TAIL = 1.0          # s of hold after the sweep

PRBS_LEVELS = (10.0, 20.0)   # N
PRBS_BIT_PERIOD = 2e-3       # s
PRBS_LENGTH = 16.0           # s
ID_DAMPING = 2.0             # N·s/m friction stand-in on both masses
ID_DISCARD = 0.5             # s of start-up transient dropped before the ETFE
ID_BAND = (1.0, 50.0)        # Hz
ID_FIT_BAND = (2.0, 30.0)    # Hz, line-fit band well inside ID_BAND


def nominal_settling_time(alpha: float) -> float:
    """2%-settling time of the ideal quadruple-pole step response."""
    return SETTLING_CONSTANT / alpha


@dataclass(frozen=True)
class Metrics:
    """Scalar summary of one trajectory against its command."""

    overshoot: float            # fraction of the normalizing amplitude
    settling_time_2pct: float   # s from command onset; nan if unsettled
    settled: bool
    steady_state_error: float   # m
    oscillation_index: float    # p2p error after nominal settling / amplitude
    rms_tracking_error: float   # m
    diverged: bool

    def as_dict(self) -> dict:
        return {
            "overshoot": self.overshoot,
            "settling_time_2pct": self.settling_time_2pct,
            "settled": self.settled,
            "steady_state_error": self.steady_state_error,
            "oscillation_index": self.oscillation_index,
            "rms_tracking_error": self.rms_tracking_error,
            "diverged": self.diverged,
        }


def compute_metrics(traj: Trajectory, amplitude: float, t_onset: float,
                    alpha: float) -> Metrics:
    """Metrics on the load position.  ``amplitude`` normalizes overshoot
    and the oscillation index (step height or chirp amplitude)."""
    t = traj.t
    x_l = traj.x_l
    cmd = traj.cmd
    err = x_l - cmd
    post = t >= t_onset
    if not post.any():
        return Metrics(0.0, math.nan, False, math.nan, math.inf, math.nan,
                       traj.diverged)

    target = cmd[-1]
    overshoot = max(0.0, (x_l[post].max() - target) / amplitude) \
        if amplitude > 0 else 0.0

    # settled means the band is entered for good, with a dwell margin so a
    # sustained oscillation sweeping through the band does not count
    dwell = max(10 * traj.control_period, 0.05 * (t[-1] - t_onset))
    out_of_band = post & (np.abs(err) > 0.02 * amplitude)
    if out_of_band.any():
        t_last = t[out_of_band][-1]
        settled = bool(t_last < t[-1] - dwell) and not traj.diverged
        settling = float(t_last - t_onset) if settled else math.nan
    else:
        settled = not traj.diverged
        settling = 0.0

    w = t >= t_onset + OSC_WINDOW_FACTOR * nominal_settling_time(alpha)
    if traj.diverged or not w.any():
        osc = math.inf if traj.diverged else math.nan
    else:
        osc = (err[w].max() - err[w].min()) / amplitude

    tail = t >= t[-1] - 0.1 * (t[-1] - t[0])
    sse = abs(float(np.mean(err[tail])))
    rms = float(np.sqrt(np.mean(err[post] ** 2)))
    return Metrics(float(overshoot), float(settling), settled, sse,
                   float(osc), rms, traj.diverged)


def step_experiment(plant: PlantParams, ctrl: ControllerConfig,
                    gains: FeedbackGains, height: float = STEP_HEIGHT,
                    sim: SimConfig | None = None) -> tuple[Trajectory, Metrics]:
    """Step command on both position inputs at STEP_TIME."""
    sim = sim or SimConfig(duration=STEP_DURATION)
    scenario = Scenario(command=CommandProfile.step(height, STEP_TIME))
    traj = run_simulation(plant, ctrl, gains, scenario, sim)
    return traj, compute_metrics(traj, height, STEP_TIME, ctrl.pole)


@dataclass(frozen=True)
class SweepRow:
    variant: str
    condition: str
    metrics: Metrics
    trajectory: Trajectory


def mismatch_sweep(plant: PlantParams,
                   controllers: dict[str, tuple[ControllerConfig, FeedbackGains]],
                   multipliers: tuple[float, ...] = (0.5, 1.0, 1.5),
                   height: float = STEP_HEIGHT,
                   sim: SimConfig | None = None,
                   jobs: int | None = None) -> list[SweepRow]:
    """Re-run the step with the DOB's nominal motor mass scaled away from
    the true value, for each controller variant."""
    if any(m <= 0 for m in multipliers):
        raise ValueError("multipliers must be positive")
    tasks = []
    for variant, (cfg, gains) in controllers.items():
        for mult in multipliers:
            mismatched = cfg.with_nominal_mass(mult * plant.motor_mass)
            tasks.append((variant, f"mmn_{mult:g}x", mismatched, gains))

    def _run(task):
        variant, condition, cfg, gains = task
        traj, metrics = step_experiment(plant, cfg, gains, height, sim)
        return SweepRow(variant, condition, metrics, traj)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run, tasks))
    return [_run(t) for t in tasks]


def load_weight_experiment(
        controllers: dict[str, tuple[ControllerConfig, FeedbackGains]],
        heavy_plant: PlantParams | None = None,
        height: float = STEP_HEIGHT,
        sim: SimConfig | None = None) -> list[SweepRow]:
    """Step on the heavier plant with gains left tuned for the light one."""
    heavy_plant = heavy_plant or table2()
    rows = []
    for variant, (cfg, gains) in controllers.items():
        traj, metrics = step_experiment(heavy_plant, cfg, gains, height, sim)
        rows.append(SweepRow(variant, "table2_plant", metrics, traj))
    return rows


def chirp_experiment(plant: PlantParams, ctrl: ControllerConfig,
                     gains: FeedbackGains,
                     f0: float = CHIRP_F0, f1: float = CHIRP_F1,
                     sweep_time: float = CHIRP_SWEEP_TIME,
                     amplitude: float = CHIRP_AMPLITUDE,
                     sim: SimConfig | None = None) -> tuple[Trajectory, Metrics]:
    """Linear frequency sweep on the load-position command."""
    if not f0 < f1:
        raise ValueError("need f0 < f1")
    duration = CHIRP_START + sweep_time + CHIRP_TAIL
    sim = sim or SimConfig(duration=duration)
    scenario = Scenario(command=CommandProfile.chirp(
        amplitude, f0, f1, sweep_time, t0=CHIRP_START))
    traj = run_simulation(plant, ctrl, gains, scenario, sim)
    return traj, compute_metrics(traj, amplitude, CHIRP_START, ctrl.pole)


# --- PRBS identification -------------------------------------------------

# Feedback tap sets (bit indices, 0 = oldest) of maximal-length shift
# registers, polynomial x^n + x^j1 + ... + 1  ->  taps {j1-?, ..., 0}.
_MLS_TAPS = {
    2: (1, 0), 3: (2, 0), 4: (3, 0), 5: (3, 0), 6: (5, 0),
    7: (6, 0), 8: (6, 5, 4, 0), 9: (5, 0), 10: (7, 0), 11: (9, 0),
    12: (11, 10, 4, 0), 13: (12, 11, 8, 0), 14: (13, 12, 2, 0),
    15: (14, 0), 16: (14, 13, 11, 0),
}


def mls_bits(n_bits: int, seed: int, size: int | None = None) -> np.ndarray:
    """Maximal-length shift-register sequence of 0/1 bits.

    ``seed`` selects the (nonzero) initial register state; the sequence
    is periodic with period 2**n_bits - 1.
    """
    if n_bits not in _MLS_TAPS:
        raise ValueError(f"no tap table for {n_bits}-bit register")
    period = (1 << n_bits) - 1
    size = period if size is None else int(size)
    taps = _MLS_TAPS[n_bits]
    state = (int(seed) % period) + 1
    out = np.empty(size, dtype=np.int8)
    for i in range(size):
        out[i] = state & 1
        fb = 0
        for tap in taps:
            fb ^= (state >> tap) & 1
        state = (state >> 1) | (fb << (n_bits - 1))
    return out


def prbs_signal(levels: tuple[float, float], bit_period: float, length: float,
                seed: int, ts: float = 1e-4) -> np.ndarray:
    """Two-level pseudo-random excitation sampled at the control period.

    Each register bit is held for ``bit_period``; the register size is
    chosen so one full maximal-length period covers the record.  Either
    sign convention works: levels (10, 20) and (-10, -20) are both valid.
    """
    low, high = levels
    if not (math.isfinite(low) and math.isfinite(high)):
        raise ValueError("levels must be finite")
    if bit_period < ts:
        raise ValueError("bit_period must be at least the sample period")
    n_samples = int(round(length / ts))
    per_bit = int(round(bit_period / ts))
    n_bits_needed = -(-n_samples // per_bit)
    n_bits = next((n for n in sorted(_MLS_TAPS)
                   if (1 << n) - 1 >= n_bits_needed), max(_MLS_TAPS))
    bits = mls_bits(n_bits, seed, n_bits_needed)
    seq = np.where(bits == 1, high, low)
    return np.repeat(seq, per_bit)[:n_samples]


@dataclass(frozen=True)
class FrequencyResponseEstimate:
    """Welch-averaged empirical transfer function with per-bin coherence."""

    freq_hz: np.ndarray
    gain: np.ndarray       # complex
    coherence: np.ndarray  # in [0, 1]; 0 marks invalid bins

    def __post_init__(self):
        if not (len(self.freq_hz) == len(self.gain) == len(self.coherence)):
            raise ValueError("grid/gain/coherence lengths differ")
        if np.any(np.diff(self.freq_hz) <= 0):
            raise ValueError("frequency grid must be strictly increasing")


def _welch_nperseg(n: int) -> int:
    nper = 256
    while nper * 2 <= min(n // 4, 32768):
        nper *= 2
    return nper


def estimate_frequency_response(u: np.ndarray, y: np.ndarray, ts: float,
                                nperseg: int | None = None
                                ) -> FrequencyResponseEstimate:
    """Empirical transfer function from cross/auto spectra.

    Hann window, 50% overlap.  Records of at least 2**14 samples give
    useful resolution below 50 Hz at the default control period.
    """
    u = np.asarray(u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if u.shape != y.shape or u.ndim != 1:
        raise ValueError("input and output must be 1-D arrays of equal length")
    fs = 1.0 / ts
    nper = nperseg or _welch_nperseg(u.size)
    kw = dict(fs=fs, window="hann", nperseg=nper, noverlap=nper // 2)
    freq, p_uu = sps.welch(u, **kw)
    _, p_uy = sps.csd(u, y, **kw)
    _, coh = sps.coherence(u, y, **kw)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(p_uu > 0, p_uy / np.where(p_uu > 0, p_uu, 1.0), 0.0)
    coh = np.where(np.isfinite(coh) & (p_uu > 0), np.clip(coh, 0.0, 1.0), 0.0)
    # drop the DC bin: positions carry arbitrary offsets
    return FrequencyResponseEstimate(freq[1:], gain[1:], coh[1:])


class IdentificationError(RuntimeError):
    """Raised when the resonance pair cannot be located in the band."""


def _line_fit(w2: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares fit y = c0 - c1*w2, returns (c0, c1)."""
    basis = np.column_stack([np.ones_like(w2), -w2])
    sol, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return float(sol[0]), float(sol[1])


def fit_plant(frf_motor: FrequencyResponseEstimate,
              frf_load: FrequencyResponseEstimate,
              band: tuple[float, float] = ID_FIT_BAND,
              coherence_min: float = 0.95) -> PlantParams:
    """Recover (Mm, Ml, Ks) from motor- and load-position transfer estimates.

    The reciprocal relative-position response is linear in omega^2 with
    slope -Mm and root at the resonance; the motor/load ratio is linear
    in omega^2 with root at the antiresonance (the notch); the total mass
    comes from the -40 dB/dec low-frequency asymptote of the load channel
    corrected by the already-estimated pole.  Those three extracted
    quantities invert exactly to the plant constants.
    """
    if not np.array_equal(frf_motor.freq_hz, frf_load.freq_hz):
        raise ValueError("motor and load estimates need a common grid")
    f = frf_load.freq_hz
    coh = np.minimum(frf_motor.coherence, frf_load.coherence)
    gain_rel = frf_motor.gain - frf_load.gain

    sel = (f >= band[0]) & (f <= band[1]) & (coh > coherence_min)
    for relaxed in (0.5, 0.0):
        if sel.sum() >= 8:
            break
        sel = (f >= band[0]) & (f <= band[1]) & (coh > relaxed)
    if sel.sum() < 4:
        raise IdentificationError("too few coherent bins in the fit band")

    w2 = (2.0 * math.pi * f[sel]) ** 2
    c0, c1 = _line_fit(w2, np.real(1.0 / gain_rel[sel]))
    if c0 <= 0 or c1 <= 0:
        raise IdentificationError("resonance peak not found in band")
    wp2 = c0 / c1
    d0, d1 = _line_fit(w2, np.real(frf_motor.gain[sel] / frf_load.gain[sel]))
    if d0 <= 0 or d1 <= 0:
        raise IdentificationError("antiresonance notch not found in band")
    wz2 = d0 / d1
    if wz2 >= wp2:
        raise IdentificationError("found notch above peak; not a two-inertia "
                                  "response in this band")

    f_z = math.sqrt(wz2) / (2.0 * math.pi)
    low = (f >= band[0]) & (f <= 0.7 * f_z) & (coh > 0.0) & sel
    if not low.any():
        low = sel & (f <= 0.7 * f_z)
    if not low.any():
        raise IdentificationError("no usable low-frequency bins for the "
                                  "mass asymptote")
    w_low2 = (2.0 * math.pi * f[low]) ** 2
    asymptote = -np.real(1.0 / frf_load.gain[low]) / w_low2
    m_total = float(np.median(asymptote * wp2 / (wp2 - w_low2)))

    m_m = m_total * wz2 / wp2
    m_l = m_total - m_m
    k_s = wz2 * m_l
    if min(m_m, m_l, k_s) <= 0:
        raise IdentificationError("inverted parameters are non-physical")
    return PlantParams(motor_mass=m_m, load_mass=m_l, spring_coeff=k_s,
                       force_coeff=1.0)


@dataclass(frozen=True)
class IdentificationResult:
    estimate: PlantParams
    frf_motor: FrequencyResponseEstimate
    frf_load: FrequencyResponseEstimate
    trajectory: Trajectory
    force: np.ndarray


def identification_experiment(plant: PlantParams | None = None,
                              levels: tuple[float, float] = PRBS_LEVELS,
                              bit_period: float = PRBS_BIT_PERIOD,
                              length: float = PRBS_LENGTH,
                              seed: int = 1,
                              sim: SimConfig | None = None
                              ) -> IdentificationResult:
    """Open-loop PRBS excitation, ETFE, and parameter fit.

    The excitation levels are offset from zero the way the physical
    protocol offsets them past static friction; since the simulated plant
    has no friction, the sequence mean is balanced by a constant counter
    force and a light viscous term stands in for the friction that keeps
    the real rig's drift bounded.
    """
    plant = plant or table1()
    plant_id = replace(plant,
                       viscous_damping_motor=ID_DAMPING,
                       viscous_damping_load=ID_DAMPING)
    sim = sim or SimConfig(duration=length, quantization_enabled=False,
                           actuator_limit=1e6)
    force = prbs_signal(levels, bit_period, length, seed, sim.control_period)
    counter = DisturbanceSchedule(
        motor=(DisturbanceSegment(0.0, math.inf, value=float(force.mean())),))
    ctrl = ControllerConfig(variant="state_feedback_only", ratio=1.0,
                            dob_cutoff=1.0, diff_cutoff=1.0, pole=1.0,
                            nominal_motor_mass=plant.motor_mass)
    zero = FeedbackGains(0.0, 0.0, 0.0, 0.0)
    scenario = Scenario(command=CommandProfile.zero(), disturbances=counter,
                        force_feedforward=force)
    traj = run_simulation(plant_id, ctrl, zero, scenario, sim)
    if traj.diverged:
        raise IdentificationError("identification run diverged")

    skip = int(round(ID_DISCARD / sim.control_period))
    skip = min(skip, len(traj) // 4)
    u = traj.F_applied[skip:]
    frf_m = estimate_frequency_response(u, traj.x_m[skip:], sim.control_period)
    frf_l = estimate_frequency_response(u, traj.x_l[skip:], sim.control_period)
    estimate = fit_plant(frf_m, frf_l)
    return IdentificationResult(estimate, frf_m, frf_l, traj, force)


# --- full reproduction suite ---------------------------------------------

def standard_controllers(plant: PlantParams | None = None
                         ) -> dict[str, tuple[ControllerConfig, FeedbackGains]]:
    """Both variants with their reference settings, gains designed on the
    given (nominal) plant."""
    plant = plant or table1()
    conv = table3(plant)
    prop = table4(plant)
    return {
        "conventional_rrc": (conv, design_gains(plant, conv)),
        "proposed_rrc": (prop, design_gains(plant, prop)),
    }


@dataclass(frozen=True)
class PaperSuiteResult:
    rows: list[SweepRow]
    identification: IdentificationResult
    id_errors: dict[str, float]


def paper_suite(jobs: int | None = None, seed: int = 1) -> PaperSuiteResult:
    """Every scenario of the experiment section, nominal plant design."""
    plant = table1()
    ctrls = standard_controllers(plant)
    rows: list[SweepRow] = []

    sweep = mismatch_sweep(plant, ctrls, (0.5, 1.0, 1.5), jobs=jobs)
    for row in sweep:
        cond = "nominal" if row.condition == "mmn_1x" else row.condition
        rows.append(SweepRow(row.variant, f"step_{cond}", row.metrics,
                             row.trajectory))
    rows.extend(SweepRow(r.variant, "step_table2_plant", r.metrics, r.trajectory)
                for r in load_weight_experiment(ctrls))

    chirp_tasks = []
    for variant, (cfg, gains) in ctrls.items():
        for mult in (0.5, 1.0, 1.5):
            cond = "nominal" if mult == 1.0 else f"mmn_{mult:g}x"
            chirp_tasks.append((variant, f"chirp_{cond}",
                                cfg.with_nominal_mass(mult * plant.motor_mass),
                                gains))

    def _chirp(task):
        variant, condition, cfg, gains = task
        traj, metrics = chirp_experiment(plant, cfg, gains)
        return SweepRow(variant, condition, metrics, traj)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows.extend(pool.map(_chirp, chirp_tasks))
    else:
        rows.extend(_chirp(t) for t in chirp_tasks)

    ident = identification_experiment(plant, seed=seed)
    truth = plant
    est = ident.estimate
    id_errors = {
        "motor_mass": abs(est.motor_mass - truth.motor_mass) / truth.motor_mass,
        "load_mass": abs(est.load_mass - truth.load_mass) / truth.load_mass,
        "spring_coeff": abs(est.spring_coeff - truth.spring_coeff) / truth.spring_coeff,
    }
    return PaperSuiteResult(rows, ident, id_errors)
