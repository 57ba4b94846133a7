import math

import numpy as np
import pytest

from rrclab import (CommandProfile, ControllerConfig, DisturbanceSchedule,
                    DisturbanceSegment, FeedbackGains, Scenario, SimConfig,
                    Trajectory, characteristic_freqs, run_simulation, table1)
from rrclab import energy as energy_fn
from rrclab._kernels import hybrid_loop_jit, hybrid_loop_py
from rrclab.controllers import (ConventionalRrc, ProposedRrc,
                                PseudoDifferentiator, quantize_floor,
                                state_feedback)
from rrclab.experiments import standard_controllers
from rrclab.sim import CSV_HEADER, trajectory_energy

from .oracles import free_oscillation, resonant_initial_state

TABLE1 = table1()
ZERO_GAINS = FeedbackGains(0.0, 0.0, 0.0, 0.0)

OPEN_LOOP = ControllerConfig(variant="state_feedback_only", ratio=1.0,
                             dob_cutoff=1.0, diff_cutoff=1.0, pole=1.0,
                             nominal_motor_mass=TABLE1.motor_mass)


def open_loop_sim(duration, *, substeps=10, initial=(0, 0, 0, 0),
                  feedforward=None, disturbances=None, quantize=False,
                  limit=1e6):
    sim = SimConfig(duration=duration, substeps=substeps,
                    actuator_limit=limit, quantization_enabled=quantize)
    scenario = Scenario(command=CommandProfile.zero(),
                        disturbances=disturbances or DisturbanceSchedule(),
                        force_feedforward=feedforward,
                        initial_state=initial)
    return run_simulation(TABLE1, OPEN_LOOP, ZERO_GAINS, scenario, sim)


class TestEquilibrium:
    def test_everything_stays_zero(self):
        traj = open_loop_sim(0.1)
        assert np.all(traj.data[:, 1:] == 0.0)
        assert not traj.diverged

    def test_closed_loop_zero_command_stays_zero(self, plant1, controllers1):
        cfg, gains = controllers1["proposed_rrc"]
        sim = SimConfig(duration=0.2, quantization_enabled=False)
        traj = run_simulation(plant1, cfg, gains, Scenario(), sim)
        assert np.abs(traj.x_l).max() == 0.0
        assert np.abs(traj.F_applied).max() == 0.0


class TestFreeOscillation:
    DEFLECTION = 1e-3

    def _run(self, duration=None, substeps=10):
        wp = characteristic_freqs(TABLE1).omega_p
        duration = duration or 10 * 2 * math.pi / wp
        x0 = resonant_initial_state(TABLE1.motor_mass, TABLE1.load_mass,
                                    self.DEFLECTION)
        return open_loop_sim(duration, substeps=substeps, initial=x0)

    def test_matches_analytic_cosine(self):
        traj = self._run()
        _, _, x_r_ref = free_oscillation(traj.t, TABLE1.motor_mass,
                                         TABLE1.load_mass,
                                         TABLE1.spring_coeff, self.DEFLECTION)
        assert np.abs(traj.x_r - x_r_ref).max() < 1e-8 * self.DEFLECTION * 1e4

    def test_frequency_error_under_0p01_pct(self):
        # zero crossings over 10 cycles pin the frequency
        traj = self._run()
        x = traj.x_r
        sign_changes = np.nonzero(np.diff(np.sign(x)) != 0)[0]
        t0s = []
        for i in sign_changes:
            # linear interpolation of the crossing instant
            t0s.append(traj.t[i] - x[i] * (traj.t[i + 1] - traj.t[i])
                       / (x[i + 1] - x[i]))
        periods = 2 * np.diff(t0s)
        wp = characteristic_freqs(TABLE1).omega_p
        measured = 2 * math.pi / periods.mean()
        assert measured == pytest.approx(wp, rel=1e-4)

    def test_energy_hand_value(self):
        traj = self._run()
        e = trajectory_energy(traj, TABLE1)
        assert e[0] == pytest.approx(0.5 * 4662.0 * 1e-6, rel=1e-9)
        assert e[0] == pytest.approx(2.331e-3, rel=1e-3)

    def test_energy_drift_below_1e8_over_1s(self):
        traj = self._run(duration=1.0)
        e = trajectory_energy(traj, TABLE1)
        assert np.abs(e - e[0]).max() / e[0] < 1e-8

    def test_rk4_convergence_ratio_near_16(self):
        # order-4 integrator: halving the substep cuts the error ~16x
        wp = characteristic_freqs(TABLE1).omega_p
        x0 = resonant_initial_state(TABLE1.motor_mass, TABLE1.load_mass, 1e-2)
        errs = []
        for substeps in (1, 2):
            sim = SimConfig(duration=1.0, substeps=substeps,
                            actuator_limit=1e6, quantization_enabled=False)
            traj = run_simulation(TABLE1, OPEN_LOOP, ZERO_GAINS,
                                  Scenario(initial_state=x0), sim)
            _, _, ref = free_oscillation(traj.t, TABLE1.motor_mass,
                                         TABLE1.load_mass,
                                         TABLE1.spring_coeff, 1e-2)
            errs.append(np.abs(traj.x_r - ref).max())
        ratio = errs[0] / errs[1]
        assert 8.0 < ratio < 32.0

    def test_substep_halving_changes_final_state_below_1e9(
            self, plant1, controllers1):
        cfg, gains = controllers1["proposed_rrc"]
        finals = []
        for substeps in (10, 20):
            sim = SimConfig(duration=0.5, substeps=substeps)
            traj = run_simulation(plant1, cfg, gains,
                                  Scenario(command=CommandProfile.step(5e-3)),
                                  sim)
            finals.append((traj.x_m[-1], traj.x_l[-1]))
        assert abs(finals[0][0] - finals[1][0]) < 1e-9
        assert abs(finals[0][1] - finals[1][1]) < 1e-9


class TestOpenLoopForce:
    def test_rigid_body_parabola_plus_bounded_oscillation(self):
        # constant 10 N: load position approaches the rigid-body parabola
        duration = 1.0
        n = int(round(duration / 1e-4))
        ff = np.full(n, 10.0)
        traj = open_loop_sim(duration, feedforward=ff)
        t_end = traj.t[-1]
        rigid = 10.0 / TABLE1.total_mass * t_end ** 2 / 2
        assert traj.x_l[-1] == pytest.approx(rigid, rel=1e-3)


class TestDeterminismAndParity:
    def test_identical_runs_bit_identical(self, plant1, controllers1):
        cfg, gains = controllers1["conventional_rrc"]
        sim = SimConfig(duration=0.3)
        s = Scenario(command=CommandProfile.step(5e-3))
        a = run_simulation(plant1, cfg, gains, s, sim)
        b = run_simulation(plant1, cfg, gains, s, sim)
        assert np.array_equal(a.data, b.data)

    @pytest.mark.skipif(hybrid_loop_jit is None, reason="numba not installed")
    def test_numba_and_python_paths_bit_identical(self):
        # constant disturbances + pre-sampled chirp command: exact parity
        args = self._kernel_args(sine_disturbance=False)
        out_jit, n_jit, div_jit = hybrid_loop_jit(*args)
        out_py, n_py, div_py = hybrid_loop_py(*args)
        assert (n_jit, div_jit) == (n_py, div_py)
        assert np.array_equal(out_jit, out_py)

    @pytest.mark.skipif(hybrid_loop_jit is None, reason="numba not installed")
    def test_sine_disturbance_paths_agree_to_last_ulp_scale(self):
        # in-kernel sin() may differ by 1 ulp between backends
        args = self._kernel_args(sine_disturbance=True)
        out_jit, *_ = hybrid_loop_jit(*args)
        out_py, *_ = hybrid_loop_py(*args)
        assert np.allclose(out_jit, out_py, rtol=0.0, atol=1e-10)

    @staticmethod
    def _kernel_args(sine_disturbance: bool):
        if sine_disturbance:
            seg = np.array([[1.0, 0.1, 1.0, 1.5, 7.0, 0.3]])
        else:
            seg = np.array([[0.0, 0.3, 0.6, 2.0, 0.0, 0.0]])
        n = 10000
        cmd = CommandProfile.chirp(1e-3, 0.5, 20.0, 0.8, t0=0.1)
        cmd_pos, cmd_vel = cmd.sample(n, 1e-4)
        return (1.20, 1.09, 4662.0, 0.0, 0.0,
                1, 2.62, 500.0, 3000.0, 1.20,
                12465.06492051264, 164.8854961832061,
                -5439.128406026507, 147.3783489050665,
                1e-4, 10, n, 80.0, 50e-9, 1,
                cmd_pos, cmd_vel,
                np.zeros(0), seg, np.zeros((0, 6)),
                np.zeros(4), 10.0)


class TestKernelMatchesControllerClasses:
    def test_forces_match_stepwise_reference(self, plant1, controllers1):
        # drive the pure-python controller classes with the trajectory's
        # measurements; they must reproduce the kernel's forces exactly
        for variant in ("conventional_rrc", "proposed_rrc"):
            cfg, gains = controllers1[variant]
            sim = SimConfig(duration=0.2)
            traj = run_simulation(plant1, cfg, gains,
                                  Scenario(command=CommandProfile.step(5e-3)),
                                  sim)
            ts = sim.control_period
            pd_m = PseudoDifferentiator(cfg.diff_cutoff, ts)
            pd_l = PseudoDifferentiator(cfg.diff_cutoff, ts)
            ctrl = (ConventionalRrc(cfg, ts) if variant == "conventional_rrc"
                    else ProposedRrc(cfg, ts))
            for k in range(len(traj)):
                xm = quantize_floor(traj.x_m[k], sim.encoder_resolution)
                xl = quantize_floor(traj.x_l[k], sim.encoder_resolution)
                vm = pd_m.update(xm)
                vl = pd_l.update(xl)
                cmd = traj.cmd[k]
                u_fb = state_feedback(cmd, 0.0, xm, vm, xl, vl, gains)
                meas = xm if variant == "conventional_rrc" else xm - xl
                force = ctrl.force(u_fb, meas)
                applied = min(max(force, -sim.actuator_limit),
                              sim.actuator_limit)
                ctrl.record_applied(applied)
                assert u_fb == pytest.approx(traj.u_fb[k], abs=1e-12)
                assert applied == pytest.approx(traj.F_applied[k], abs=1e-12)


class TestQuantization:
    def test_quantization_effect_is_bounded(self, plant1, controllers1):
        cfg, gains = controllers1["proposed_rrc"]
        runs = []
        for quant in (True, False):
            sim = SimConfig(duration=1.0, quantization_enabled=quant)
            traj = run_simulation(plant1, cfg, gains,
                                  Scenario(command=CommandProfile.step(5e-3)),
                                  sim)
            runs.append(traj.x_l)
        assert np.abs(runs[0] - runs[1]).max() < 1e-6


class TestDisturbances:
    def test_constant_segment_windows(self):
        sched = DisturbanceSchedule(
            motor=(DisturbanceSegment(0.05, 0.1, value=3.0),))
        traj = open_loop_sim(0.2, disturbances=sched)
        inside = (traj.t >= 0.05) & (traj.t < 0.1)
        assert np.all(traj.dist_m[inside] == 3.0)
        assert np.all(traj.dist_m[~inside] == 0.0)

    def test_overlapping_segments_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            DisturbanceSchedule(motor=(DisturbanceSegment(0.0, 1.0, value=1.0),
                                       DisturbanceSegment(0.5, 2.0, value=2.0)))

    def test_sine_segment_recorded(self):
        seg = DisturbanceSegment(0.0, math.inf, value=2.0, frequency=5.0,
                                 kind="sine")
        traj = open_loop_sim(0.2, disturbances=DisturbanceSchedule(load=(seg,)))
        expected = 2.0 * np.sin(2 * np.pi * 5.0 * traj.t)
        assert np.abs(traj.dist_l - expected).max() < 1e-12

    def test_dob_estimate_converges_to_motor_disturbance(
            self, plant1, controllers1):
        # closed loop, constant motor-side force: the observer's estimate
        # converges to the true disturbance (steady state holds x_r at 0)
        for variant in ("conventional_rrc", "proposed_rrc"):
            cfg, gains = controllers1[variant]
            sched = DisturbanceSchedule.constant(motor=5.0)
            sim = SimConfig(duration=1.0, quantization_enabled=False)
            traj = run_simulation(plant1, cfg, gains,
                                  Scenario(disturbances=sched), sim)
            assert traj.F_hat[-1] == pytest.approx(5.0, rel=1e-3)

    def test_load_disturbance_estimate_decomposition(
            self, plant1, controllers1):
        # steady state under constant load force d: the estimate equals the
        # spring-coupling term Mm*wp^2*x_r plus the direct term -(Mm/Ml)*d
        cfg, gains = controllers1["proposed_rrc"]
        d = 4.0
        sched = DisturbanceSchedule.constant(load=d)
        sim = SimConfig(duration=1.5, quantization_enabled=False)
        traj = run_simulation(plant1, cfg, gains,
                              Scenario(disturbances=sched), sim)
        wp = characteristic_freqs(plant1).omega_p
        spring_term = plant1.motor_mass * wp ** 2 * traj.x_r[-1]
        direct = traj.F_hat[-1] - spring_term
        assert direct == pytest.approx(-(plant1.motor_mass / plant1.load_mass) * d,
                                       rel=1e-3)

    def test_steady_state_error_under_mismatch_without_external_force(
            self, plant1, controllers1):
        # pure model error (wrong nominal mass) leaves no position offset:
        # the loop equilibrium is exact within ~20 nominal settling times
        cfg, gains = controllers1["proposed_rrc"]
        cfg = cfg.with_nominal_mass(1.3 * plant1.motor_mass)
        sim = SimConfig(duration=0.1 + 20.0 / cfg.pole)
        traj = run_simulation(plant1, cfg, gains,
                              Scenario(command=CommandProfile.step(5e-3)), sim)
        assert abs(traj.x_l[-1] - 5e-3) < 1e-6


class TestVariantEquivalenceAtUnityRatio:
    def test_identical_forces_when_ratio_is_one(self, plant1):
        from rrclab.presets import design_gains
        runs = {}
        for variant in ("conventional_rrc", "proposed_rrc"):
            cfg = ControllerConfig(variant=variant, ratio=1.0, dob_cutoff=1.0,
                                   diff_cutoff=3000.0, pole=90.0,
                                   nominal_motor_mass=plant1.motor_mass)
            gains = design_gains(plant1, cfg)
            sim = SimConfig(duration=1.0)
            traj = run_simulation(plant1, cfg, gains,
                                  Scenario(command=CommandProfile.step(5e-3)),
                                  sim)
            runs[variant] = traj.F_applied
        delta = np.abs(runs["conventional_rrc"] - runs["proposed_rrc"]).max()
        assert delta < 1e-9


class TestDivergenceFlag:
    def test_unstable_loop_flags_and_truncates(self, plant1):
        # positive position feedback with huge gain blows up quickly
        cfg = ControllerConfig(variant="state_feedback_only", ratio=1.0,
                               dob_cutoff=1.0, diff_cutoff=3000.0, pole=90.0,
                               nominal_motor_mass=plant1.motor_mass)
        gains = FeedbackGains(-1e6, 0.0, -1e6, 0.0)
        sim = SimConfig(duration=5.0, actuator_limit=1e9,
                        quantization_enabled=False)
        traj = run_simulation(plant1, cfg, gains,
                              Scenario(command=CommandProfile.step(1e-2)), sim)
        assert traj.diverged
        assert traj.diverged_at is not None
        assert len(traj) < sim.n_ticks
        assert np.abs(traj.x_m).max() <= 10.0 + 1.0  # flagged near the bound


class TestTrajectoryCsv:
    def test_round_trip(self, tmp_path, plant1, controllers1):
        cfg, gains = controllers1["proposed_rrc"]
        sim = SimConfig(duration=0.05)
        traj = run_simulation(plant1, cfg, gains,
                              Scenario(command=CommandProfile.step(1e-3)), sim)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        text = path.read_text()
        assert text.splitlines()[0] == CSV_HEADER
        back = Trajectory.from_csv(path)
        assert back.data.shape == traj.data.shape
        # 9 significant digits survive the round trip at this scale
        assert np.abs(back.data - traj.data).max() < 1e-9

    def test_energy_helper_matches_columns(self, plant1):
        x0 = resonant_initial_state(plant1.motor_mass, plant1.load_mass, 1e-3)
        traj = open_loop_sim(0.01, initial=x0)
        e = energy_fn(traj.x_r, traj.v_m, traj.v_l, plant1)
        assert e[0] == pytest.approx(0.5 * plant1.spring_coeff * 1e-6)


class TestCommandProfiles:
    def test_chirp_validation(self):
        with pytest.raises(ValueError):
            CommandProfile.chirp(1e-3, 10.0, 5.0, 10.0)
        with pytest.raises(ValueError):
            CommandProfile.chirp(1e-3, 1.0, 5.0, -1.0)

    def test_chirp_command_matches_formula(self, plant1, controllers1):
        cfg, gains = controllers1["proposed_rrc"]
        amp, f0, f1, sweep, t0 = 1e-3, 1.0, 5.0, 1.0, 0.1
        sim = SimConfig(duration=1.5)
        traj = run_simulation(plant1, cfg, gains,
                              Scenario(command=CommandProfile.chirp(
                                  amp, f0, f1, sweep, t0)), sim)
        tau = np.clip(traj.t - t0, 0.0, sweep)
        phase = 2 * np.pi * (f0 * tau + (f1 - f0) / (2 * sweep) * tau ** 2)
        expected = amp * np.sin(phase)
        expected[traj.t < t0] = 0.0
        assert np.abs(traj.cmd - expected).max() < 1e-12
