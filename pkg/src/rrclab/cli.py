"""Command-line entry point.

Subcommands: ``synthesize``, ``run``, ``identify``, ``sweep``,
``reproduce-paper``.  Exit codes: 0 success (a reproduced divergence is a
result, not an error), 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import (ConfigError, RunConfig, load_config, resolve_controller,
                     resolve_plant, resolve_sim)
from .plant import characteristic_freqs
from .presets import design_gains
from .serialize import write_json
from .sim import CommandProfile, DisturbanceSchedule, DisturbanceSegment, Scenario, run_simulation
from .synthesis import (closed_loop_coeffs, closed_loop_poles,
                        conventional_modified_params, modified_params,
                        routh_stable)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IOError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config PATH is required for this subcommand")
    try:
        return load_config(args.config)
    except OSError as exc:
        raise IOError(f"cannot read config {args.config}: {exc}") from exc


def _gains_report(plant, ctrl):
    gains = design_gains(plant, ctrl)
    if ctrl.variant == "conventional_rrc":
        mod = conventional_modified_params(plant, ctrl.ratio)
    else:
        mod = modified_params(plant, ctrl.ratio)
    coeffs = closed_loop_coeffs(plant, ctrl.ratio, gains) \
        if ctrl.variant != "conventional_rrc" else None
    poles = closed_loop_poles(plant, ctrl.ratio, gains) \
        if coeffs is not None else None
    freqs = characteristic_freqs(plant)
    report = {
        "variant": ctrl.variant,
        "ratio": ctrl.ratio,
        "alpha": ctrl.pole,
        "plant": {
            "motor_mass": plant.motor_mass,
            "load_mass": plant.load_mass,
            "spring_coeff": plant.spring_coeff,
            "f_p": freqs.f_p,
            "f_z": freqs.f_z,
        },
        "modified": {
            "motor_mass": mod.motor_mass,
            "load_mass": mod.load_mass,
            "spring_coeff": mod.spring_coeff,
            "f_p": mod.f_p,
        },
        "gains": {
            "k_pm": gains.k_pm,
            "k_dm": gains.k_dm,
            "k_pl": gains.k_pl,
            "k_dl": gains.k_dl,
        },
    }
    if coeffs is not None:
        report["closed_loop"] = {
            "numerator_gain": coeffs.numerator_gain,
            "a3": coeffs.a3, "a2": coeffs.a2,
            "a1": coeffs.a1, "a0": coeffs.a0,
            "routh_stable": routh_stable(coeffs),
            "poles_real": [float(p.real) for p in sorted(poles, key=lambda z: z.real)],
        }
    return gains, report


def cmd_synthesize(args) -> int:
    cfg = _load(args)
    plant = resolve_plant(cfg)
    ctrl = resolve_controller(cfg, plant)
    gains, report = _gains_report(plant, ctrl)
    mod = report["modified"]
    print(f"variant            : {ctrl.variant}")
    print(f"ratio K            : {ctrl.ratio:.6g}")
    print(f"quadruple pole     : {ctrl.pole:.6g} rad/s")
    print(f"modified motor mass: {mod['motor_mass']:.6g} kg")
    print(f"modified load mass : {mod['load_mass']:.6g} kg")
    print(f"modified stiffness : {mod['spring_coeff']:.6g} N/m")
    print(f"modified resonance : {mod['f_p']:.6g} Hz")
    print(f"k_pm = {gains.k_pm:.6g} N/m    k_dm = {gains.k_dm:.6g} N*s/m")
    print(f"k_pl = {gains.k_pl:.6g} N/m    k_dl = {gains.k_dl:.6g} N*s/m")
    if "closed_loop" in report:
        verdict = "stable" if report["closed_loop"]["routh_stable"] else "UNSTABLE"
        print(f"closed loop        : {verdict}")
    if args.out:
        out = _out_dir(args)
        write_json(out / "synthesis.json", report)
        print(f"wrote {out / 'synthesis.json'}")
    return EXIT_OK


def _scenario_from_config(cfg: RunConfig):
    sec = cfg.scenario
    kind = sec.get("kind", "step")
    get = lambda key, default: float(sec[key]) if key in sec else default
    if kind == "step":
        command = CommandProfile.step(get("step_height", experiments.STEP_HEIGHT),
                                      get("step_time", experiments.STEP_TIME))
        default_duration = experiments.STEP_DURATION
        amplitude = command.height
        onset = command.t0
    elif kind == "chirp":
        command = CommandProfile.chirp(
            get("chirp_amplitude", experiments.CHIRP_AMPLITUDE),
            get("chirp_f0", experiments.CHIRP_F0),
            get("chirp_f1", experiments.CHIRP_F1),
            get("chirp_sweep_time", experiments.CHIRP_SWEEP_TIME),
            get("chirp_start", experiments.CHIRP_START))
        default_duration = (command.t0 + command.sweep_time
                            + experiments.CHIRP_TAIL)
        amplitude = command.amplitude
        onset = command.t0
    elif kind == "none":
        command = CommandProfile.zero()
        default_duration = experiments.STEP_DURATION
        amplitude = 1.0
        onset = 0.0
    else:
        raise ConfigError(f"scenario.kind must be step, chirp or none, "
                          f"got {kind!r}")
    motor = ()
    load = ()
    if "dist_m_value" in sec:
        motor = (DisturbanceSegment(get("dist_m_t0", 0.0),
                                    get("dist_m_t1", math.inf),
                                    value=float(sec["dist_m_value"])),)
    if "dist_l_value" in sec:
        load = (DisturbanceSegment(get("dist_l_t0", 0.0),
                                   get("dist_l_t1", math.inf),
                                   value=float(sec["dist_l_value"])),)
    scenario = Scenario(command=command,
                        disturbances=DisturbanceSchedule(motor, load))
    return scenario, default_duration, amplitude, onset


def cmd_run(args) -> int:
    cfg = _load(args)
    plant = resolve_plant(cfg)
    ctrl = resolve_controller(cfg, plant)
    gains = design_gains(plant, ctrl)
    scenario, default_duration, amplitude, onset = _scenario_from_config(cfg)
    sim = resolve_sim(cfg, default_duration)
    out = _out_dir(args)

    traj = run_simulation(plant, ctrl, gains, scenario, sim)
    metrics = experiments.compute_metrics(traj, amplitude, onset, ctrl.pole)
    traj.to_csv(out / "trajectory.csv")
    write_json(out / "metrics.json", {
        "metrics": metrics.as_dict(),
        "diverged_at": traj.diverged_at,
        "samples": len(traj),
    })
    print(f"wrote {out / 'trajectory.csv'} ({len(traj)} samples)"
          + (" [diverged]" if traj.diverged else ""))
    return EXIT_OK


def _write_frf_csv(path, result) -> None:
    frf = result.frf_load
    rows = []
    for i in range(len(frf.freq_hz)):
        if frf.freq_hz[i] > 100.0:
            break
        rows.append(f"{frf.freq_hz[i]:.9g},"
                    f"{result.frf_motor.gain[i].real:.9g},"
                    f"{result.frf_motor.gain[i].imag:.9g},"
                    f"{frf.gain[i].real:.9g},{frf.gain[i].imag:.9g},"
                    f"{frf.coherence[i]:.9g}")
    Path(path).write_text(
        "f_hz,G_motor_re,G_motor_im,G_load_re,G_load_im,coherence\n"
        + "\n".join(rows) + "\n")


def cmd_identify(args) -> int:
    cfg = RunConfig() if args.config is None else _load(args)
    plant = resolve_plant(cfg) if cfg.plant else experiments.table1()
    sec = cfg.scenario
    levels = (float(sec["prbs_low"]) if "prbs_low" in sec else experiments.PRBS_LEVELS[0],
              float(sec["prbs_high"]) if "prbs_high" in sec else experiments.PRBS_LEVELS[1])
    bit_period = float(sec.get("prbs_bit_period", experiments.PRBS_BIT_PERIOD))
    length = float(sec.get("prbs_length", experiments.PRBS_LENGTH))
    out = _out_dir(args)
    result = experiments.identification_experiment(
        plant, levels=levels, bit_period=bit_period, length=length,
        seed=args.seed)
    est = result.estimate
    _write_frf_csv(out / "frf.csv", result)
    write_json(out / "identified.json", {
        "estimate": {"motor_mass": est.motor_mass,
                     "load_mass": est.load_mass,
                     "spring_coeff": est.spring_coeff},
        "truth": {"motor_mass": plant.motor_mass,
                  "load_mass": plant.load_mass,
                  "spring_coeff": plant.spring_coeff},
        "relative_error": {
            "motor_mass": abs(est.motor_mass - plant.motor_mass) / plant.motor_mass,
            "load_mass": abs(est.load_mass - plant.load_mass) / plant.load_mass,
            "spring_coeff": abs(est.spring_coeff - plant.spring_coeff) / plant.spring_coeff,
        },
        "seed": args.seed,
    })
    print(f"identified Mm={est.motor_mass:.4g} kg Ml={est.load_mass:.4g} kg "
          f"Ks={est.spring_coeff:.5g} N/m -> {out / 'identified.json'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    plant = resolve_plant(cfg)
    ctrls = experiments.standard_controllers(plant)
    out = _out_dir(args)
    rows = experiments.mismatch_sweep(plant, ctrls, jobs=args.jobs)
    summary = []
    for row in rows:
        name = f"step_{row.variant}_{row.condition}"
        row.trajectory.to_csv(out / f"{name}.csv")
        summary.append({"experiment": "step", "variant": row.variant,
                        "condition": row.condition,
                        "metrics": row.metrics.as_dict()})
    write_json(out / "summary.json", {"rows": summary})
    print(f"wrote {len(rows)} scenarios to {out}")
    return EXIT_OK


def cmd_reproduce_paper(args) -> int:
    out = _out_dir(args)
    result = experiments.paper_suite(jobs=args.jobs, seed=args.seed)
    summary_rows = []
    for row in result.rows:
        name = f"{row.condition}_{row.variant}"
        row.trajectory.to_csv(out / f"{name}.csv")
        experiment = row.condition.split("_")[0]
        summary_rows.append({"experiment": experiment, "variant": row.variant,
                             "condition": row.condition,
                             "metrics": row.metrics.as_dict()})

    by = {(r.variant, r.condition): r.metrics for r in result.rows}
    conv, prop = "conventional_rrc", "proposed_rrc"
    checks = {
        "nominal_parity_ok": _parity(result.rows) < 0.02,
        "nominal_parity_value": _parity(result.rows),
        "mismatch_osc_ratio_1p5": (
            by[(conv, "step_mmn_1.5x")].oscillation_index
            / by[(prop, "step_mmn_1.5x")].oscillation_index),
        "proposed_never_diverged": not any(
            m.diverged for (v, _), m in by.items() if v == prop),
        "chirp_completed_nominal_both": not (
            by[(conv, "chirp_nominal")].diverged
            or by[(prop, "chirp_nominal")].diverged),
        "identification_max_error": max(result.id_errors.values()),
    }

    plant = experiments.table1()
    synth = {}
    for variant, (ctrl, _) in experiments.standard_controllers(plant).items():
        _, report = _gains_report(plant, ctrl)
        synth[variant] = report

    write_json(out / "summary.json", {"rows": summary_rows, "checks": checks})
    write_json(out / "synthesis.json", synth)
    _write_frf_csv(out / "frf.csv", result.identification)
    write_json(out / "identified.json", {
        "estimate": {"motor_mass": result.identification.estimate.motor_mass,
                     "load_mass": result.identification.estimate.load_mass,
                     "spring_coeff": result.identification.estimate.spring_coeff},
        "relative_error": result.id_errors,
    })
    print(f"wrote {len(result.rows)} scenario trajectories and summary.json "
          f"to {out}")
    return EXIT_OK


def _parity(rows) -> float:
    conv = next(r.trajectory for r in rows
                if r.variant == "conventional_rrc"
                and r.condition == "step_nominal")
    prop = next(r.trajectory for r in rows
                if r.variant == "proposed_rrc" and r.condition == "step_nominal")
    n = min(len(conv), len(prop))
    return float(np.abs(conv.x_l[:n] - prop.x_l[:n]).max()
                 / experiments.STEP_HEIGHT)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rrclab",
        description="Two-inertia resonance-ratio-control simulation laboratory")
    parser.add_argument("--config", help="INI or JSON run configuration")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=os.cpu_count(),
                        help="parallel scenario workers")
    parser.add_argument("--seed", type=int, default=1,
                        help="seed for the identification excitation")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synthesize", help="design gains and report the modified system")
    sub.add_parser("run", help="run one scenario from --config")
    sub.add_parser("identify", help="PRBS identification pipeline")
    sub.add_parser("sweep", help="nominal-mass mismatch sweep, both variants")
    sub.add_parser("reproduce-paper", help="full experiment reproduction suite")
    args = parser.parse_args(argv)

    handlers = {
        "synthesize": cmd_synthesize,
        "run": cmd_run,
        "identify": cmd_identify,
        "sweep": cmd_sweep,
        "reproduce-paper": cmd_reproduce_paper,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
