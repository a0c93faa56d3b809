"""Numba kernels for fixed-step explicit Euler runs.

These mirror the plain-Python definitions in :mod:`ptdiff.redesign`,
:mod:`ptdiff.families` and :mod:`ptdiff.dynamics`; the tests check the two
paths against each other. Parameters arrive as flat float arrays:

``rp = [alpha, T_c, eta, beta, rho, max(L, mu), kappa_cap]``
"""
import math

import numpy as np
from numba import njit

LINEAR, LEVANT, FIXED_TIME, MENARD = 0, 1, 2, 3
SYS_ERROR, SYS_DIFF, SYS_FILTER = 0, 1, 2

OK, NONFINITE = 0, 1


@njit(cache=True)
def spow(x, a):
    if x == 0.0:
        return 0.0
    s = 1.0 if x > 0.0 else -1.0
    if a == 0.0:
        return s
    return s * abs(x) ** a


@njit(cache=True)
def phi(code, fpar, gains, n, i, w):
    if code == LINEAR:
        return fpar[0] ** (i + 1) * gains[i] * w
    elif code == LEVANT:
        return gains[i] * fpar[0] ** ((i + 1) / (n + 1)) * spow(w, (n - i) / (n + 1))
    elif code == FIXED_TIME:
        L = fpar[0]
        k = fpar[1]
        if i == 0:
            return 4.0 * math.sqrt(L) * (spow(w, 0.5) + k * spow(w, 1.5))
        return 2.0 * L * (spow(w, 0.0) + 4.0 * k * k * w + 3.0 * k ** 4 * spow(w, 2.0))
    else:
        th = fpar[0]
        c = fpar[1]
        b = fpar[2]
        return th ** (i + 1) * gains[i] * (spow(w, (i + 1) * c - i) + spow(w, (i + 1) * b - i))


@njit(cache=True)
def kappa(t, rp):
    alpha = rp[0]
    Tc = rp[1]
    eta = rp[2]
    if t >= Tc:
        return 1.0
    k = eta / (alpha * (Tc - eta * t))
    if k > rp[6]:
        return rp[6]
    return k


@njit(cache=True)
def h_vec(e0, t, mode, terminal, n, code, fpar, gains, rp, Q, M, tg, out, buf):
    """Fill ``out`` with the correction terms.

    mode 0: redesigned (kappa schedule, terminal switch); mode 1: base phi.
    """
    if mode == 1:
        for i in range(n + 1):
            out[i] = phi(code, fpar, gains, n, i, e0)
        return 1.0
    if terminal:
        Lmu = rp[5]
        for i in range(n + 1):
            out[i] = tg[i] * Lmu ** ((i + 1) / (n + 1)) * spow(e0, (n - i) / (n + 1))
        return 1.0
    beta = rp[3]
    rho = rp[4]
    k = kappa(t, rp)
    kr = 1.0
    if rho != 0.0:
        kr = k ** rho
    for i in range(n + 1):
        buf[i] = phi(code, fpar, gains, n, i, kr * e0 / beta)
    for i in range(n + 1):
        s = 0.0
        for j in range(i + 1):
            s += Q[i, j] * buf[j]
        out[i] = k ** (1 + i - rho) * (beta * s + kr * M[i] * e0)
    return k


@njit(cache=True)
def euler_chunk(system, mode, nf, x, times, inputs, count, stride,
                rec_x, rec_k, rec_pos,
                n, code, fpar, gains, rp, Q, M, tg,
                mon, mon_tol, mon_dwell):
    """Advance ``x`` in place across ``times``; record every ``stride``-th state.

    ``inputs[k]`` is the disturbance (error system) or the measured signal
    (differentiator / filter) held over step ``k``. ``mon`` holds the
    convergence monitor ``[count, switched, switch_time]``; ``mon_dwell <= 0``
    disables it. Returns ``(status, rec_pos, steps_done)``.
    """
    m = times.size - 1
    h = np.empty(n + 1)
    buf = np.empty(n + 1)
    dx = np.empty(n + 1)
    Tc = rp[1]
    for k in range(m):
        t = times[k]
        u = inputs[k]
        if system == SYS_DIFF:
            e0 = x[0] - u
        else:
            e0 = x[0]
        if mon_dwell > 0 and mon[1] == 0.0 and t < Tc:
            if abs(e0) < mon_tol:
                mon[0] += 1.0
                if mon[0] >= mon_dwell:
                    mon[1] = 1.0
                    mon[2] = t
            else:
                mon[0] = 0.0
        terminal = t >= Tc or mon[1] != 0.0
        kap = h_vec(e0, t, mode, terminal, n, code, fpar, gains, rp, Q, M, tg, h, buf)
        if (count + k) % stride == 0:
            for j in range(n + 1):
                rec_x[rec_pos, j] = x[j]
            rec_k[rec_pos] = kap
            rec_pos += 1
        for j in range(n):
            dx[j] = -h[j] + x[j + 1]
        dx[n] = -h[n]
        if system == SYS_ERROR:
            dx[n] += u
        elif system == SYS_FILTER:
            dx[nf - 1] -= u
        dt = times[k + 1] - t
        for j in range(n + 1):
            x[j] += dt * dx[j]
            if not math.isfinite(x[j]):
                return NONFINITE, rec_pos, k + 1
    return OK, rec_pos, m
