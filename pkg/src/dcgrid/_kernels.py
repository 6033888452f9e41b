"""Compiled right-hand sides and the explicit Runge-Kutta integrators.

Everything here operates on flat float64 arrays so numba can compile it.
The packed parameter vector produced by :func:`dcgrid.model.pack` has the
layout::

    [n, tau, k_p, k_i, D, v_0, i_0, c_pu, p_fc_total, p_load,
     e_B[0..n), R_B[0..n), L_pu[0..n)]

and the state is ``[i_B(n) | alpha(n) | alpha_ref(n) | v]``.
"""

import numpy as np
from numba import njit

HEADER = 10

OK = 0
SINGULAR = 1
BLOWUP = 2
STEP_UNDERFLOW = 3


@njit(cache=True)
def grid_rhs(t, y, p, out):
    n = int(p[0])
    tau = p[1]
    k_p = p[2]
    k_i = p[3]
    droop = p[4]
    v_0 = p[5]
    i_0 = p[6]
    c_pu = p[7]
    p_fc = p[8]
    p_load = p[9]
    v = y[3 * n]
    if not v > 0.0:
        return SINGULAR
    for j in range(n):
        if not y[n + j] > 0.0:
            return SINGULAR

    bus_current = 0.0
    for j in range(n):
        bus_current += y[j] / y[n + j]
    f_v = (bus_current + p_fc / v - p_load / v) / c_pu
    out[3 * n] = f_v

    for j in range(n):
        i_b = y[j]
        a = y[n + j]
        a_ref = y[2 * n + j]
        e_b = p[HEADER + j]
        r_b = p[HEADER + n + j]
        l_pu = p[HEADER + 2 * n + j]
        f_i = (e_b - r_b * i_b - v / a) / l_pu
        f_a = (a_ref - a) / tau
        # d/dt (i_B / alpha), expanded with the branch and lag dynamics
        g = f_i / a + i_b / (tau * a) - i_b * a_ref / (tau * a * a)
        out[j] = f_i
        out[n + j] = f_a
        out[2 * n + j] = (k_p * (-f_v - droop * g)
                          + k_i * (v_0 - v - droop * (i_b / a - i_0)))
    return OK


@njit(cache=True)
def decay_rhs(t, y, p, out):
    """Harness system dx/dt = -p[0] * x, componentwise."""
    for k in range(y.shape[0]):
        out[k] = -p[0] * y[k]
    return OK


@njit(cache=True)
def rotation_rhs(t, y, p, out):
    """Harness system dx/dt = [[0, w], [-w, 0]] x with w = p[0]."""
    out[0] = p[0] * y[1]
    out[1] = -p[0] * y[0]
    return OK


GRID = 0
DECAY = 1
ROTATION = 2


@njit(cache=True)
def system_rhs(system, t, y, p, out):
    if system == GRID:
        return grid_rhs(t, y, p, out)
    if system == DECAY:
        return decay_rhs(t, y, p, out)
    return rotation_rhs(t, y, p, out)


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# difference between the 5th and embedded 4th order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)


@njit(cache=True)
def _out_of_bounds(y, blowup):
    for k in range(y.shape[0]):
        if not abs(y[k]) <= blowup:
            return True
    return False


@njit(cache=True)
def _hermite(t0, y0, f0, t1, y1, f1, t, out):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    for k in range(y0.shape[0]):
        out[k] = h00 * y0[k] + h10 * h * f0[k] + h01 * y1[k] + h11 * h * f1[k]


@njit(cache=True)
def dopri(system, p, t0, y0, t_end, rtol, atol, h_max, sample_dt, blowup):
    """Adaptive Dormand-Prince 5(4) with cubic Hermite dense output.

    Returns ``(times, states, status, n_accepted, n_rejected)``. Samples are
    taken every ``sample_dt`` from ``t0``; ``t_end`` is always the last sample
    unless the run stops early, in which case the last accepted state is
    appended so the truncated trajectory ends where integration failed.
    """
    dim = y0.shape[0]
    n_grid = int(np.floor((t_end - t0) / sample_dt * (1.0 + 1e-12))) + 1
    times = np.empty(n_grid + 2)
    states = np.empty((n_grid + 2, dim))

    y = y0.copy()
    t = t0
    times[0] = t0
    states[0, :] = y0
    n_out = 1
    next_k = 1

    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    tmp = np.empty(dim)
    y_new = np.empty(dim)
    buf = np.empty(dim)

    status = system_rhs(system, t, y, p, k1)
    if status != OK:
        return times[:n_out], states[:n_out], status, 0, 0

    # initial step from the scaled derivative norm
    d0 = 0.0
    d1 = 0.0
    for k in range(dim):
        sc = atol + rtol * abs(y[k])
        d0 += (y[k] / sc) ** 2
        d1 += (k1[k] / sc) ** 2
    d0 = np.sqrt(d0 / dim)
    d1 = np.sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, h_max, t_end - t0)
    h_min = 1e-14 * max(1.0, abs(t_end))

    n_acc = 0
    n_rej = 0
    status = OK
    while t < t_end:
        if t + h > t_end:
            h = t_end - t
        stage_ok = True
        for k in range(dim):
            tmp[k] = y[k] + h * _A21 * k1[k]
        if system_rhs(system, t + _C2 * h, tmp, p, k2) != OK:
            stage_ok = False
        if stage_ok:
            for k in range(dim):
                tmp[k] = y[k] + h * (_A31 * k1[k] + _A32 * k2[k])
            if system_rhs(system, t + _C3 * h, tmp, p, k3) != OK:
                stage_ok = False
        if stage_ok:
            for k in range(dim):
                tmp[k] = y[k] + h * (_A41 * k1[k] + _A42 * k2[k] + _A43 * k3[k])
            if system_rhs(system, t + _C4 * h, tmp, p, k4) != OK:
                stage_ok = False
        if stage_ok:
            for k in range(dim):
                tmp[k] = y[k] + h * (_A51 * k1[k] + _A52 * k2[k]
                                     + _A53 * k3[k] + _A54 * k4[k])
            if system_rhs(system, t + _C5 * h, tmp, p, k5) != OK:
                stage_ok = False
        if stage_ok:
            for k in range(dim):
                tmp[k] = y[k] + h * (_A61 * k1[k] + _A62 * k2[k] + _A63 * k3[k]
                                     + _A64 * k4[k] + _A65 * k5[k])
            if system_rhs(system, t + h, tmp, p, k6) != OK:
                stage_ok = False
        if stage_ok:
            for k in range(dim):
                y_new[k] = y[k] + h * (_B1 * k1[k] + _B3 * k3[k] + _B4 * k4[k]
                                       + _B5 * k5[k] + _B6 * k6[k])
            if system_rhs(system, t + h, y_new, p, k7) != OK:
                stage_ok = False

        if not stage_ok:
            # a trial stage left the admissible region; retry smaller
            n_rej += 1
            h *= 0.25
            if h < h_min:
                status = SINGULAR
                break
            continue

        err = 0.0
        for k in range(dim):
            sc = atol + rtol * max(abs(y[k]), abs(y_new[k]))
            e = h * (_E1 * k1[k] + _E3 * k3[k] + _E4 * k4[k] + _E5 * k5[k]
                     + _E6 * k6[k] + _E7 * k7[k])
            err += (e / sc) ** 2
        err = np.sqrt(err / dim)

        if err <= 1.0:
            t_new = t + h
            while next_k < n_grid and t0 + next_k * sample_dt <= t_new:
                ts = t0 + next_k * sample_dt
                _hermite(t, y, k1, t_new, y_new, k7, ts, buf)
                times[n_out] = ts
                states[n_out, :] = buf
                n_out += 1
                next_k += 1
            t = t_new
            for k in range(dim):
                y[k] = y_new[k]
                k1[k] = k7[k]
            n_acc += 1
            if _out_of_bounds(y, blowup):
                status = BLOWUP
                break
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, h_max)
        else:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                status = STEP_UNDERFLOW
                break

    if status == OK:
        if times[n_out - 1] < t_end:
            times[n_out] = t_end
            states[n_out, :] = y
            n_out += 1
    elif t > times[n_out - 1]:
        times[n_out] = t
        states[n_out, :] = y
        n_out += 1
    return times[:n_out], states[:n_out], status, n_acc, n_rej


@njit(cache=True)
def rk4(system, p, t0, y0, t_end, h, blowup):
    """Classical fixed-step RK4; returns only the end state and a status."""
    dim = y0.shape[0]
    n_steps = int(np.ceil((t_end - t0) / h - 1e-9))
    h = (t_end - t0) / n_steps
    y = y0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    t = t0
    for _ in range(n_steps):
        if system_rhs(system, t, y, p, k1) != OK:
            return y, SINGULAR
        for k in range(dim):
            tmp[k] = y[k] + 0.5 * h * k1[k]
        if system_rhs(system, t + 0.5 * h, tmp, p, k2) != OK:
            return y, SINGULAR
        for k in range(dim):
            tmp[k] = y[k] + 0.5 * h * k2[k]
        if system_rhs(system, t + 0.5 * h, tmp, p, k3) != OK:
            return y, SINGULAR
        for k in range(dim):
            tmp[k] = y[k] + h * k3[k]
        if system_rhs(system, t + h, tmp, p, k4) != OK:
            return y, SINGULAR
        for k in range(dim):
            y[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
        t += h
        if _out_of_bounds(y, blowup):
            return y, BLOWUP
    return y, OK



@njit(cache=True)
def rhs_grid(p, y):
    out = np.empty(y.shape[0])
    status = grid_rhs(0.0, y, p, out)
    return out, status
