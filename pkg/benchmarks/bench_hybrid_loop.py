#!/usr/bin/env python3
"""Benchmark the simulation kernel: numba JIT vs pure-Python fallback.

The two paths run the identical code object (`RRCLAB_NUMBA=0` selects
the fallback at import time in normal use).  Run:

    python benchmarks/bench_hybrid_loop.py [--duration 0.5] [--repeat 3]
"""

import argparse
import time

import numpy as np

from rrclab import CommandProfile, SimConfig, table1
from rrclab._kernels import NUMBA_AVAILABLE, hybrid_loop_jit, hybrid_loop_py
from rrclab.experiments import standard_controllers


def kernel_args(duration: float):
    plant = table1()
    cfg, gains = standard_controllers(plant)["proposed_rrc"]
    sim = SimConfig(duration=duration)
    n = sim.n_ticks
    cmd_pos, cmd_vel = CommandProfile.step(5e-3, 0.1).sample(
        n, sim.control_period)
    return (plant.motor_mass, plant.load_mass, plant.spring_coeff, 0.0, 0.0,
            1, cfg.ratio, cfg.dob_cutoff, cfg.diff_cutoff,
            cfg.nominal_motor_mass,
            gains.k_pm, gains.k_dm, gains.k_pl, gains.k_dl,
            sim.control_period, sim.substeps, n,
            sim.actuator_limit, sim.encoder_resolution, 1,
            cmd_pos, cmd_vel, np.zeros(0),
            np.zeros((0, 6)), np.zeros((0, 6)),
            np.zeros(4), 10.0)


def time_fn(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--duration", type=float, default=0.5,
                        help="simulated seconds (default 0.5)")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    kargs = kernel_args(args.duration)
    ticks = kargs[16]
    print(f"scenario: 5 mm step, {args.duration} s simulated, "
          f"{ticks} control ticks x {kargs[15]} RK4 substeps")

    t_py = time_fn(hybrid_loop_py, kargs, args.repeat)
    print(f"pure python : {t_py * 1e3:10.1f} ms "
          f"({ticks / t_py / 1e3:8.1f} kticks/s)")

    if NUMBA_AVAILABLE:
        hybrid_loop_jit(*kargs)  # compile outside the timed region
        t_jit = time_fn(hybrid_loop_jit, kargs, args.repeat)
        print(f"numba njit  : {t_jit * 1e3:10.1f} ms "
              f"({ticks / t_jit / 1e3:8.1f} kticks/s)")
        print(f"speedup     : {t_py / t_jit:10.1f}x")
        out_a, *_ = hybrid_loop_py(*kargs)
        out_b, *_ = hybrid_loop_jit(*kargs)
        print(f"bit identical: {np.array_equal(out_a, out_b)}")
    else:
        print("numba not available; only the fallback path was timed")


if __name__ == "__main__":
    main()
