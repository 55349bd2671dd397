"""Pure-Python game-loop and tatonnement kernels.

Reference implementation of the hot loops; the compiled extension in
``_ext.pyx`` mirrors it statement for statement so the two backends produce
bit-identical output (both run on C doubles through libm).  Keep any change
here in lockstep with the extension.

Model kinds: 0 = CES, 1 = iso-elastic.
Algorithms:  0 = ogd, 1 = omd, 2 = oftrl.
Feedback:    0 = exact, 1 = adjusted, 2 = smoothed.
Schedules:   0 = inverse-sqrt, 1 = fixed.
"""

from math import exp, log, sqrt

import numpy as np

NAME = "python"


def run_game(
    model_kind,
    budget,
    wpow,
    sigma,
    log_scales,
    model_elast,
    T,
    n,
    supply,
    algo,
    feedback,
    sched,
    eta_fixed,
    fb_elast,
    eps_r,
    lo,
    hi,
    p0,
    out_p,
    out_x,
    out_rev,
    out_g,
):
    """Run T simultaneous-move pricing rounds; fills the (T, n) output arrays."""
    wpow = list(map(float, wpow))
    log_scales = list(map(float, log_scales))
    eta_fixed = list(map(float, eta_fixed))
    algo = list(map(int, algo))
    feedback = list(map(int, feedback))
    sched = list(map(int, sched))
    supply_rows = np.asarray(supply, dtype=float).tolist()
    budget = float(budget)
    sigma = float(sigma)
    model_elast = float(model_elast)
    fb_elast = float(fb_elast)
    eps_r = float(eps_r)
    lo = float(lo)
    hi = float(hi)

    neg_sigma = -sigma
    one_m_sigma = 1.0 - sigma

    cur = [float(v) for v in p0]
    start = list(cur)
    cum = [0.0] * n
    gprev = [0.0] * n
    lp = [0.0] * n
    p = [0.0] * n
    x = [0.0] * n
    eta = [0.0] * n

    for t in range(1, T + 1):
        w_row = supply_rows[t - 1]

        for i in range(n):
            if sched[i] == 0:
                eta[i] = 1.0 / sqrt(t)
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
                z = z + wpow[j] * p[j] ** one_m_sigma
            for i in range(n):
                x[i] = budget * wpow[i] * p[i] ** neg_sigma / z
        else:
            s = 0.0
            for j in range(n):
                s = s + lp[j]
            for i in range(n):
                x[i] = exp(log_scales[i] - model_elast * lp[i] + model_elast * (s - lp[i]))

        row = t - 1
        for i in range(n):
            wv = w_row[i]
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
    model_kind,
    budget,
    wpow,
    sigma,
    log_scales,
    model_elast,
    n,
    w,
    kappa,
    tol,
    max_iter,
    lo,
    hi,
    pt,
):
    """Damped log-space price adjustment toward market clearing.

    Mutates ``pt`` (length-n float64 array of log prices) in place and
    returns ``(iterations, residual, converged)``; the residual is the
    max-norm of log excess demand at the returned point.
    """
    wpow = list(map(float, wpow))
    log_scales = list(map(float, log_scales))
    budget = float(budget)
    sigma = float(sigma)
    model_elast = float(model_elast)
    kappa = float(kappa)
    tol = float(tol)
    lo = float(lo)
    hi = float(hi)

    neg_sigma = -sigma
    one_m_sigma = 1.0 - sigma

    lnw = [log(float(v)) for v in w]
    q = [float(v) for v in pt]
    lx = [0.0] * n

    it = 0
    resid = 0.0
    while True:
        if model_kind == 0:
            z = 0.0
            for j in range(n):
                z = z + wpow[j] * exp(q[j]) ** one_m_sigma
            for i in range(n):
                lx[i] = log(budget * wpow[i] * exp(q[i]) ** neg_sigma / z)
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
