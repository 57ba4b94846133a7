"""Hybrid simulation kernel: discrete controller + RK4 plant integration.

The whole control loop lives in one self-contained function so that the
same code object can run two ways:

* compiled with ``numba.njit`` (default; ``cache=True, nogil=True``), or
* as plain Python when numba is unavailable or ``RRCLAB_NUMBA=0``.

Both paths execute identical arithmetic in identical order, so results
are bit-for-bit equal (command profiles are pre-sampled outside the
kernel for exactly this reason).  The lone exception: sinusoidal
disturbance segments call ``sin`` inside the loop, where the two
backends may differ in the last ulp.  Filter blocks mirror
:mod:`rrclab.controllers` exactly.

Column layout of the output array (one row per control tick):
    0 t, 1 x_m, 2 v_m, 3 x_l, 4 v_l, 5 x_r, 6 cmd, 7 u_fb,
    8 F_hat, 9 F_applied, 10 dist_m, 11 dist_l
"""

from __future__ import annotations

import os

import numpy as np

N_COLUMNS = 12

SEG_CONST = 0
SEG_SINE = 1

VARIANT_CONVENTIONAL = 0
VARIANT_PROPOSED = 1
VARIANT_STATE_FEEDBACK = 2


def _hybrid_loop_impl(mm, ml, ks, cm, cl,
                      variant, ratio, g_d, g_l, m_nominal,
                      kpm, kdm, kpl, kdl,
                      ts, substeps, n_ticks,
                      force_limit, encoder_res, quantize,
                      cmd_pos_arr, cmd_vel_arr,
                      force_ff,
                      dist_m_seg, dist_l_seg,
                      state0, divergence_limit):
    out = np.zeros((n_ticks, N_COLUMNS))

    # bilinear first-order filters: y = a*y_prev + b*(u + u_prev)
    a_gl = (2.0 - g_l * ts) / (2.0 + g_l * ts)
    b_gl = g_l * ts / (2.0 + g_l * ts)
    a_gd = (2.0 - g_d * ts) / (2.0 + g_d * ts)
    b_gd = g_d * ts / (2.0 + g_d * ts)

    pdm_y = 0.0; pdm_u = 0.0   # pseudo-diff LPF, motor position
    pdl_y = 0.0; pdl_u = 0.0   # pseudo-diff LPF, load position
    pdd_y = 0.0; pdd_u = 0.0   # pseudo-diff LPF, DOB channel
    dob_y = 0.0; dob_u = 0.0   # DOB low pass
    force_prev = 0.0

    x_m = state0[0]; v_m = state0[1]; x_l = state0[2]; v_l = state0[3]
    dob_gain = g_d * m_nominal
    h = ts / substeps
    diverged = 0
    n_done = n_ticks

    for k in range(n_ticks):
        t = k * ts
        if (not (np.isfinite(x_m) and np.isfinite(v_m)
                 and np.isfinite(x_l) and np.isfinite(v_l))
                or abs(x_m) > divergence_limit or abs(x_l) > divergence_limit):
            diverged = 1
            n_done = k
            break

        if quantize != 0:
            xm_meas = np.floor(x_m / encoder_res) * encoder_res
            xl_meas = np.floor(x_l / encoder_res) * encoder_res
        else:
            xm_meas = x_m
            xl_meas = x_l
        xr_meas = xm_meas - xl_meas

        pdm_y = a_gl * pdm_y + b_gl * (xm_meas + pdm_u); pdm_u = xm_meas
        vhat_m = g_l * (xm_meas - pdm_y)
        pdl_y = a_gl * pdl_y + b_gl * (xl_meas + pdl_u); pdl_u = xl_meas
        vhat_l = g_l * (xl_meas - pdl_y)

        cmd_pos = cmd_pos_arr[k]
        cmd_vel = cmd_vel_arr[k]

        u_fb = (kpm * (cmd_pos - xm_meas) + kdm * (cmd_vel - vhat_m)
                + kpl * (cmd_pos - xl_meas) + kdl * (cmd_vel - vhat_l))

        if variant == VARIANT_STATE_FEEDBACK:
            f_hat = 0.0
            force = u_fb
        else:
            dob_in = xm_meas if variant == VARIANT_CONVENTIONAL else xr_meas
            pdd_y = a_gl * pdd_y + b_gl * (dob_in + pdd_u); pdd_u = dob_in
            vhat_d = g_l * (dob_in - pdd_y)
            z = force_prev + dob_gain * vhat_d
            dob_y = a_gd * dob_y + b_gd * (z + dob_u); dob_u = z
            f_hat = dob_y - dob_gain * vhat_d
            force = ratio * u_fb + (1.0 - ratio) * f_hat

        if force_ff.shape[0] > 0:
            force = force + force_ff[k]
        if force > force_limit:
            force = force_limit
        elif force < -force_limit:
            force = -force_limit
        force_prev = force

        # disturbances at the tick time, for the record
        dm_t = 0.0
        for i in range(dist_m_seg.shape[0]):
            if dist_m_seg[i, 1] <= t < dist_m_seg[i, 2]:
                if dist_m_seg[i, 0] == SEG_SINE:
                    dm_t += dist_m_seg[i, 3] * np.sin(
                        2.0 * np.pi * dist_m_seg[i, 4] * (t - dist_m_seg[i, 1])
                        + dist_m_seg[i, 5])
                else:
                    dm_t += dist_m_seg[i, 3]
        dl_t = 0.0
        for i in range(dist_l_seg.shape[0]):
            if dist_l_seg[i, 1] <= t < dist_l_seg[i, 2]:
                if dist_l_seg[i, 0] == SEG_SINE:
                    dl_t += dist_l_seg[i, 3] * np.sin(
                        2.0 * np.pi * dist_l_seg[i, 4] * (t - dist_l_seg[i, 1])
                        + dist_l_seg[i, 5])
                else:
                    dl_t += dist_l_seg[i, 3]

        out[k, 0] = t
        out[k, 1] = x_m; out[k, 2] = v_m
        out[k, 3] = x_l; out[k, 4] = v_l
        out[k, 5] = x_m - x_l
        out[k, 6] = cmd_pos
        out[k, 7] = u_fb
        out[k, 8] = f_hat
        out[k, 9] = force
        out[k, 10] = dm_t
        out[k, 11] = dl_t

        # RK4 over the control period with zero-order-hold force
        for j in range(substeps):
            t_s = t + j * h
            # stage-time disturbances (start, mid, end of substep)
            dm1 = 0.0; dm2 = 0.0; dm4 = 0.0
            for i in range(dist_m_seg.shape[0]):
                t0 = dist_m_seg[i, 1]; t1 = dist_m_seg[i, 2]
                kind = dist_m_seg[i, 0]
                amp = dist_m_seg[i, 3]; frq = dist_m_seg[i, 4]; ph = dist_m_seg[i, 5]
                if t0 <= t_s < t1:
                    dm1 += amp * np.sin(2.0 * np.pi * frq * (t_s - t0) + ph) \
                        if kind == SEG_SINE else amp
                if t0 <= t_s + 0.5 * h < t1:
                    dm2 += amp * np.sin(2.0 * np.pi * frq * (t_s + 0.5 * h - t0) + ph) \
                        if kind == SEG_SINE else amp
                if t0 <= t_s + h < t1:
                    dm4 += amp * np.sin(2.0 * np.pi * frq * (t_s + h - t0) + ph) \
                        if kind == SEG_SINE else amp
            dl1 = 0.0; dl2 = 0.0; dl4 = 0.0
            for i in range(dist_l_seg.shape[0]):
                t0 = dist_l_seg[i, 1]; t1 = dist_l_seg[i, 2]
                kind = dist_l_seg[i, 0]
                amp = dist_l_seg[i, 3]; frq = dist_l_seg[i, 4]; ph = dist_l_seg[i, 5]
                if t0 <= t_s < t1:
                    dl1 += amp * np.sin(2.0 * np.pi * frq * (t_s - t0) + ph) \
                        if kind == SEG_SINE else amp
                if t0 <= t_s + 0.5 * h < t1:
                    dl2 += amp * np.sin(2.0 * np.pi * frq * (t_s + 0.5 * h - t0) + ph) \
                        if kind == SEG_SINE else amp
                if t0 <= t_s + h < t1:
                    dl4 += amp * np.sin(2.0 * np.pi * frq * (t_s + h - t0) + ph) \
                        if kind == SEG_SINE else amp

            k1xm = v_m
            k1vm = (-ks * (x_m - x_l) + force - dm1 - cm * v_m) / mm
            k1xl = v_l
            k1vl = (ks * (x_m - x_l) - dl1 - cl * v_l) / ml

            xm2 = x_m + 0.5 * h * k1xm; vm2 = v_m + 0.5 * h * k1vm
            xl2 = x_l + 0.5 * h * k1xl; vl2 = v_l + 0.5 * h * k1vl
            k2xm = vm2
            k2vm = (-ks * (xm2 - xl2) + force - dm2 - cm * vm2) / mm
            k2xl = vl2
            k2vl = (ks * (xm2 - xl2) - dl2 - cl * vl2) / ml

            xm3 = x_m + 0.5 * h * k2xm; vm3 = v_m + 0.5 * h * k2vm
            xl3 = x_l + 0.5 * h * k2xl; vl3 = v_l + 0.5 * h * k2vl
            k3xm = vm3
            k3vm = (-ks * (xm3 - xl3) + force - dm2 - cm * vm3) / mm
            k3xl = vl3
            k3vl = (ks * (xm3 - xl3) - dl2 - cl * vl3) / ml

            xm4 = x_m + h * k3xm; vm4 = v_m + h * k3vm
            xl4 = x_l + h * k3xl; vl4 = v_l + h * k3vl
            k4xm = vm4
            k4vm = (-ks * (xm4 - xl4) + force - dm4 - cm * vm4) / mm
            k4xl = vl4
            k4vl = (ks * (xm4 - xl4) - dl4 - cl * vl4) / ml

            x_m = x_m + h * (k1xm + 2.0 * k2xm + 2.0 * k3xm + k4xm) / 6.0
            v_m = v_m + h * (k1vm + 2.0 * k2vm + 2.0 * k3vm + k4vm) / 6.0
            x_l = x_l + h * (k1xl + 2.0 * k2xl + 2.0 * k3xl + k4xl) / 6.0
            v_l = v_l + h * (k1vl + 2.0 * k2vl + 2.0 * k3vl + k4vl) / 6.0

    return out, n_done, diverged


hybrid_loop_py = _hybrid_loop_impl

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via RRCLAB_NUMBA=0 instead
    njit = None
    NUMBA_AVAILABLE = False

USING_NUMBA = NUMBA_AVAILABLE and os.environ.get("RRCLAB_NUMBA", "1") != "0"

if NUMBA_AVAILABLE:
    hybrid_loop_jit = njit(cache=True, nogil=True)(_hybrid_loop_impl)
else:
    hybrid_loop_jit = None

hybrid_loop = hybrid_loop_jit if USING_NUMBA else hybrid_loop_py
