"""Render figure analogues from rrclab's CSV/JSON artifacts.

Conventions: conventional variant blue, proposed red, reference black
dotted.  Inputs are read-only; output filenames are deterministic.
Five figure kinds are supported:

* ``step_overlay``  — load position of both variants vs the reference
* ``chirp_overlay`` — same for the chirp scenario
* ``bode``          — magnitude/phase of the identification FRF, with
  the resonance peak annotated where the data put it
* ``metrics_bar``   — oscillation index per scenario from summary.json
* ``frf``           — measured load FRF vs the identified-model fit
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("step_overlay", "chirp_overlay", "bode", "metrics_bar", "frf")

CONVENTIONAL_COLOR = "tab:blue"
PROPOSED_COLOR = "tab:red"
REFERENCE_STYLE = dict(color="black", linestyle=":", linewidth=1.2)

TRAJECTORY_COLUMNS = ["t", "x_m", "v_m", "x_l", "v_l", "x_r", "cmd",
                      "u_fb", "F_hat", "F_applied", "dist_m", "dist_l"]

FRF_COLUMNS = ["f_hz", "G_motor_re", "G_motor_im", "G_load_re", "G_load_im",
               "coherence"]


class RenderError(RuntimeError):
    """Malformed or missing input; the message names the offender."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: dict
    output: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        for name, path in self.inputs.items():
            if not Path(path).exists():
                raise RenderError(f"input {name} not found: {path}")


def read_trajectory(path) -> dict:
    """Load a trajectory CSV into named columns, validating the header."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    missing = [c for c in TRAJECTORY_COLUMNS if c not in header]
    if missing:
        raise RenderError(
            f"{path}: missing trajectory column(s) {', '.join(missing)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise RenderError(f"{path}: ragged rows vs header")
    return {name: data[:, i] for i, name in enumerate(header)}


def read_frf(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    missing = [c for c in FRF_COLUMNS if c not in header]
    if missing:
        raise RenderError(f"{path}: missing FRF column(s) {', '.join(missing)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    cols["G_motor"] = cols["G_motor_re"] + 1j * cols["G_motor_im"]
    cols["G_load"] = cols["G_load_re"] + 1j * cols["G_load_im"]
    return cols


def _overlay(spec: PlotSpec, title: str, zoom_to_command: bool) -> None:
    conv = read_trajectory(spec.inputs["conventional"])
    prop = read_trajectory(spec.inputs["proposed"])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(conv["t"], 1e3 * conv["x_l"], color=CONVENTIONAL_COLOR,
            label="conventional (motor-side DOB)")
    ax.plot(prop["t"], 1e3 * prop["x_l"], color=PROPOSED_COLOR,
            label="proposed (relative position)")
    ax.plot(conv["t"], 1e3 * conv["cmd"], **REFERENCE_STYLE,
            label="reference")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("load position [mm]")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    if zoom_to_command:
        span = 1e3 * np.abs(conv["cmd"]).max()
        if span > 0:
            ax.set_ylim(-0.4 * span, 1.8 * span)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_step_overlay(spec: PlotSpec) -> None:
    _overlay(spec, "Step response", zoom_to_command=True)


def render_chirp_overlay(spec: PlotSpec) -> None:
    _overlay(spec, "Chirp response", zoom_to_command=False)


def render_bode(spec: PlotSpec) -> None:
    frf = read_frf(spec.inputs["frf"])
    f = frf["f_hz"]
    band = (f >= 1.0) & (f <= 60.0)
    rel = np.abs(frf["G_motor"] - frf["G_load"])[band]
    load = np.abs(frf["G_load"])[band]
    phase = np.degrees(np.angle(frf["G_load"]))[band]
    f = f[band]
    f_peak = f[np.argmax(rel)]

    fig, (ax_mag, ax_ph) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_mag.loglog(f, load, color=PROPOSED_COLOR, label="|x_l / F|")
    ax_mag.loglog(f, rel, color=CONVENTIONAL_COLOR, label="|x_r / F|")
    ax_mag.axvline(f_peak, color="gray", linestyle="--", linewidth=1)
    ax_mag.annotate(f"peak {f_peak:.1f} Hz", (f_peak, rel.max()),
                    textcoords="offset points", xytext=(6, -2), fontsize=8)
    ax_mag.set_ylabel("magnitude [m/N]")
    ax_mag.legend(fontsize=8)
    ax_mag.grid(alpha=0.3, which="both")
    ax_ph.semilogx(f, phase, color=PROPOSED_COLOR)
    ax_ph.set_xlabel("frequency [Hz]")
    ax_ph.set_ylabel("load phase [deg]")
    ax_ph.grid(alpha=0.3, which="both")
    fig.suptitle("Measured frequency response")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_metrics_bar(spec: PlotSpec) -> None:
    with open(spec.inputs["summary"]) as fh:
        summary = json.load(fh)
    rows = summary.get("rows")
    if not rows:
        raise RenderError(f"{spec.inputs['summary']}: no rows field")
    conditions = sorted({r["condition"] for r in rows})
    by = {(r["variant"], r["condition"]): r["metrics"] for r in rows}

    def osc(variant, cond):
        m = by.get((variant, cond))
        if m is None:
            return math.nan
        val = m["oscillation_index"]
        return float(val) if val is not None else math.inf

    x = np.arange(len(conditions))
    width = 0.38
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(x - width / 2, [osc("conventional_rrc", c) for c in conditions],
           width, color=CONVENTIONAL_COLOR, label="conventional")
    ax.bar(x + width / 2, [osc("proposed_rrc", c) for c in conditions],
           width, color=PROPOSED_COLOR, label="proposed")
    ax.set_yscale("log")
    ax.set_ylabel("oscillation index [-]")
    ax.set_xticks(x, conditions, rotation=30, ha="right", fontsize=8)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y", which="both")
    ax.set_title("Residual oscillation by scenario")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_frf(spec: PlotSpec) -> None:
    frf = read_frf(spec.inputs["frf"])
    with open(spec.inputs["identified"]) as fh:
        ident = json.load(fh)
    try:
        est = ident["estimate"]
        m_m, m_l, k_s = (est["motor_mass"], est["load_mass"],
                         est["spring_coeff"])
    except KeyError as exc:
        raise RenderError(
            f"{spec.inputs['identified']}: missing estimate field {exc}"
        ) from None
    f = frf["f_hz"]
    band = (f >= 1.0) & (f <= 60.0)
    f = f[band]
    w = 2 * np.pi * f
    wp2 = k_s * (1 / m_m + 1 / m_l)
    wz2 = k_s / m_l
    model = wz2 / (m_m * w ** 2 * np.abs(wp2 - w ** 2))

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.loglog(f, np.abs(frf["G_load"])[band], color=PROPOSED_COLOR,
              label="measured |x_l / F|")
    ax.loglog(f, model, **REFERENCE_STYLE, label="identified model")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("magnitude [m/N]")
    ax.set_title("Identification fit")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


RENDERERS = {
    "step_overlay": render_step_overlay,
    "chirp_overlay": render_chirp_overlay,
    "bode": render_bode,
    "metrics_bar": render_metrics_bar,
    "frf": render_frf,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the output path."""
    Path(spec.output).parent.mkdir(parents=True, exist_ok=True)
    RENDERERS[spec.kind](spec)
    return Path(spec.output)


def default_specs(in_dir, out_dir) -> list[PlotSpec]:
    """Figure set for a ``reproduce-paper`` output tree."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    specs = []

    def traj(name):
        return in_dir / f"{name}.csv"

    step_conditions = ["step_nominal", "step_mmn_0.5x", "step_mmn_1.5x",
                       "step_table2_plant"]
    for cond in step_conditions:
        conv, prop = (traj(f"{cond}_conventional_rrc"),
                      traj(f"{cond}_proposed_rrc"))
        if conv.exists() and prop.exists():
            specs.append(PlotSpec(
                "step_overlay",
                {"conventional": conv, "proposed": prop},
                out_dir / f"{cond}.png"))
    for cond in ["chirp_nominal", "chirp_mmn_0.5x", "chirp_mmn_1.5x"]:
        conv, prop = (traj(f"{cond}_conventional_rrc"),
                      traj(f"{cond}_proposed_rrc"))
        if conv.exists() and prop.exists():
            specs.append(PlotSpec(
                "chirp_overlay",
                {"conventional": conv, "proposed": prop},
                out_dir / f"{cond}.png"))
    if (in_dir / "frf.csv").exists():
        specs.append(PlotSpec("bode", {"frf": in_dir / "frf.csv"},
                              out_dir / "bode.png"))
        if (in_dir / "identified.json").exists():
            specs.append(PlotSpec(
                "frf",
                {"frf": in_dir / "frf.csv",
                 "identified": in_dir / "identified.json"},
                out_dir / "identification_fit.png"))
    if (in_dir / "summary.json").exists():
        specs.append(PlotSpec("metrics_bar",
                              {"summary": in_dir / "summary.json"},
                              out_dir / "metrics.png"))
    if not specs:
        raise RenderError(f"no renderable artifacts found in {in_dir}")
    return specs
