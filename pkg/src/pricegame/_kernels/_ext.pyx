# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled game-loop and tatonnement kernels.

Statement-for-statement mirror of ``_py.py`` (see that module for the code
commentary and the integer encodings); compiled with -ffp-contract=off so the
two backends stay bit-identical.
"""

from libc.math cimport exp, log, pow, sqrt

import numpy as np

NAME = "ext"


def run_game(
    int model_kind,
    double budget,
    double[::1] wpow,
    double sigma,
    double[::1] log_scales,
    double model_elast,
    int T,
    int n,
    double[:, ::1] supply,
    int[::1] algo,
    int[::1] feedback,
    int[::1] sched,
    double[::1] eta_fixed,
    double fb_elast,
    double eps_r,
    double lo,
    double hi,
    double[::1] p0,
    double[:, ::1] out_p,
    double[:, ::1] out_x,
    double[:, ::1] out_rev,
    double[:, ::1] out_g,
):
    """Run T simultaneous-move pricing rounds; fills the (T, n) output arrays."""
    cdef double neg_sigma = -sigma
    cdef double one_m_sigma = 1.0 - sigma

    scratch = np.empty((8, n), dtype=np.float64)
    cdef double[:, ::1] st = scratch
    cdef double[::1] cur = st[0]
    cdef double[::1] start = st[1]
    cdef double[::1] cum = st[2]
    cdef double[::1] gprev = st[3]
    cdef double[::1] lp = st[4]
    cdef double[::1] p = st[5]
    cdef double[::1] x = st[6]
    cdef double[::1] eta = st[7]

    cdef int t, i, j, a, fb, row
    cdef double v, z, s, wv, xv, g, tt

    for i in range(n):
        cur[i] = p0[i]
        start[i] = cur[i]
        cum[i] = 0.0
        gprev[i] = 0.0

    for t in range(1, T + 1):
        for i in range(n):
            if sched[i] == 0:
                eta[i] = 1.0 / sqrt(<double> t)
            else:
                eta[i] = eta_fixed[i]
            a = algo[i]
            if a == 0:
                v = cur[i]
            elif a == 1:
                v = cur[i] + eta[i] * gprev[i]
            else:
                v = start[i] + eta[i] * (cum[i] + gprev[i])
            lp[i] = lo if v < lo else (hi if v > hi else v)
            p[i] = exp(lp[i])

        if model_kind == 0:
            z = 0.0
            for j in range(n):
                z = z + wpow[j] * pow(p[j], one_m_sigma)
            for i in range(n):
                x[i] = budget * wpow[i] * pow(p[i], neg_sigma) / z
        else:
            s = 0.0
            for j in range(n):
                s = s + lp[j]
            for i in range(n):
                x[i] = exp(log_scales[i] - model_elast * lp[i] + model_elast * (s - lp[i]))

        row = t - 1
        for i in range(n):
            wv = supply[row, i]
            xv = x[i]
            fb = feedback[i]
            if fb == 0:
                g = 1.0 if xv >= wv else 1.0 - fb_elast
            elif fb == 1:
                g = 1.0 if xv >= wv else -1.0
            else:
                tt = (log(xv) - log(wv)) / eps_r
                if tt > 0.0:
                    g = 1.0
                elif tt < -1.0:
                    g = 1.0 - fb_elast
                else:
                    g = 1.0 + fb_elast * tt

            a = algo[i]
            if a == 2:
                cum[i] = cum[i] + g
            else:
                v = cur[i] + eta[i] * g
                cur[i] = lo if v < lo else (hi if v > hi else v)
            gprev[i] = g

            out_p[row, i] = p[i]
            out_x[row, i] = xv
            out_rev[row, i] = p[i] * (xv if xv < wv else wv)
            out_g[row, i] = g


def tatonnement(
    int model_kind,
    double budget,
    double[::1] wpow,
    double sigma,
    double[::1] log_scales,
    double model_elast,
    int n,
    double[::1] w,
    double kappa,
    double tol,
    int max_iter,
    double lo,
    double hi,
    double[::1] pt,
):
    """Damped log-space price adjustment; mirrors ``_py.tatonnement``."""
    cdef double neg_sigma = -sigma
    cdef double one_m_sigma = 1.0 - sigma

    scratch = np.empty((3, n), dtype=np.float64)
    cdef double[:, ::1] st = scratch
    cdef double[::1] lnw = st[0]
    cdef double[::1] q = st[1]
    cdef double[::1] lx = st[2]

    cdef int i, j, it
    cdef double z, s, d, resid, v

    for i in range(n):
        lnw[i] = log(w[i])
        q[i] = pt[i]

    it = 0
    resid = 0.0
    while True:
        if model_kind == 0:
            z = 0.0
            for j in range(n):
                z = z + wpow[j] * pow(exp(q[j]), one_m_sigma)
            for i in range(n):
                lx[i] = log(budget * wpow[i] * pow(exp(q[i]), neg_sigma) / z)
        else:
            s = 0.0
            for j in range(n):
                s = s + q[j]
            for i in range(n):
                lx[i] = log_scales[i] - model_elast * q[i] + model_elast * (s - q[i])

        resid = 0.0
        for i in range(n):
            d = lx[i] - lnw[i]
            if d < 0.0:
                d = -d
            if d > resid:
                resid = d
        if resid < tol or it >= max_iter:
            break
        for i in range(n):
            v = q[i] + kappa * (lx[i] - lnw[i])
            q[i] = lo if v < lo else (hi if v > hi else v)
        it += 1

    for i in range(n):
        pt[i] = q[i]
    return it, resid, resid < tol
