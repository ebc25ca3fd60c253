"""Compiled inner loops for the constrained solves of the attack policy.

Every region problem is small (n <= a few dozen) and needs hundreds of
projected-gradient steps, so the cost is dominated by interpreter overhead;
these loops run them row by row in compiled code. The numpy routines in
``estimation`` compute the same projections and serve as the reference.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def simplex_project_into(v, out):
    n = v.size
    u = np.sort(v)[::-1]
    css = 0.0
    shift = 0.0
    for k in range(n):
        css += u[k]
        cand = (css - 1.0) / (k + 1)
        if u[k] - cand > 0.0:
            shift = cand
    for i in range(n):
        out[i] = max(v[i] - shift, 0.0)


@njit(cache=True)
def _sq_dist(x, c):
    s = 0.0
    for i in range(x.size):
        s += (x[i] - c[i]) ** 2
    return s


@njit(cache=True)
def ball_project_into(v, c, r, t0, out, buf):
    """Project ``v`` onto simplex-and-ball; returns the shrink factor used."""
    n = v.size
    simplex_project_into(v, out)
    if _sq_dist(out, c) <= r:
        return 1.0
    if r <= 0.0:
        out[:] = c
        return 0.0
    lo, hi = 0.0, 1.0
    if 0.0 < t0 < 1.0:
        for i in range(n):
            buf[i] = c[i] + t0 * (v[i] - c[i])
        simplex_project_into(buf, out)
        if _sq_dist(out, c) > r:
            hi = t0
        else:
            lo = t0
    cand = np.empty(n)
    for _ in range(80):
        size = 0
        sd = 0.0
        sc = 0.0
        rest = 0.0
        for i in range(n):
            if out[i] > 0.0:
                size += 1
                sd += v[i] - c[i]
                sc += c[i]
            else:
                rest += c[i] * c[i]
        drift = sd / size
        k = (sc - 1.0) / size
        aa = 0.0
        for i in range(n):
            if out[i] > 0.0:
                aa += (v[i] - c[i] - drift) ** 2
        budget = r - size * k * k - rest
        t = -1.0
        if aa > 0.0 and budget > 0.0:
            t = math.sqrt(budget / aa)
        if not (lo <= t <= hi):
            t = 0.5 * (lo + hi)
        for i in range(n):
            buf[i] = c[i] + t * (v[i] - c[i])
        simplex_project_into(buf, cand)
        dist = _sq_dist(cand, c)
        same = True
        for i in range(n):
            if (cand[i] > 0.0) != (out[i] > 0.0):
                same = False
                break
        out[:] = cand
        if same and abs(dist - r) <= 1e-12 * r + 1e-15:
            return t
        if dist > r:
            hi = t
        else:
            lo = t
        if hi - lo < 1e-15:
            break
    for i in range(n):
        buf[i] = c[i] + lo * (v[i] - c[i])
    simplex_project_into(buf, out)
    return lo


@njit(cache=True)
def _project_region(v, c, r, a, b, t0, out, buf):
    if a >= 0:
        m = 0.5 * (v[a] + v[b])
        v[a] = m
        v[b] = m
    return ball_project_into(v, c, r, t0, out, buf)


@njit(cache=True)
def _pair_grad(y, coef, first, second, g):
    g[:] = 0.0
    for k in range(coef.size):
        if coef[k] != 0.0:
            push = coef[k] / (1.0 + math.exp(y[first[k]] - y[second[k]]))
            g[first[k]] += push
            g[second[k]] -= push


@njit(cache=True)
def region_max(coef, first, second, centers, radius, tie_a, tie_b, x, step, max_iters, tol, guess):
    """Maximize ``sum coef log g`` on each row's region, in place on ``x``.

    Row ``r`` is the support ball ``(centers[r], radius[r])`` intersected with
    the simplex and, when ``tie_a[r] >= 0``, the tie hyperplane of
    ``(tie_a[r], tie_b[r])``. Returns the iteration count of each row.
    """
    rows, n = x.shape
    counts = np.zeros(rows, dtype=np.int64)
    g = np.empty(n)
    v = np.empty(n)
    buf = np.empty(n)
    xn = np.empty(n)
    for r in range(rows):
        c = centers[r]
        rad = max(radius[r], 0.0)
        a, b = tie_a[r], tie_b[r]
        xr = x[r].copy()
        guess[r] = _project_region(xr.copy(), c, rad, a, b, guess[r], xn, buf)
        xr[:] = xn
        y = xr.copy()
        t = 1.0
        it = 0
        while it < max_iters:
            it += 1
            _pair_grad(y, coef, first, second, g)
            for i in range(n):
                v[i] = y[i] + step * g[i]
            guess[r] = _project_region(v, c, rad, a, b, guess[r], xn, buf)
            moved = 0.0
            dot = 0.0
            for i in range(n):
                diff = xn[i] - xr[i]
                moved = max(moved, abs(diff))
                dot += (y[i] - xn[i]) * diff
            if moved <= tol:
                xr[:] = xn
                break
            if dot > 0.0:
                t = 1.0
                y[:] = xn
            else:
                t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                mom = (t - 1.0) / t_next
                for i in range(n):
                    y[i] = xn[i] + mom * (xn[i] - xr[i])
                t = t_next
            xr[:] = xn
        x[r] = xr
        counts[r] = it
    return counts


@njit(cache=True)
def penalized_max(coef, first, second, center, mu, x, step, max_iters, tol):
    """Maximize ``sum coef log g - mu/2 ||theta - center||^2`` over the simplex.

    Runs in place on ``x``; returns ``(iterations, last step size)``.
    """
    n = x.size
    g = np.empty(n)
    v = np.empty(n)
    xn = np.empty(n)
    y = x.copy()
    t = 1.0
    moved = np.inf
    it = 0
    while it < max_iters:
        it += 1
        _pair_grad(y, coef, first, second, g)
        for i in range(n):
            v[i] = y[i] + step * (g[i] - mu * (y[i] - center[i]))
        simplex_project_into(v, xn)
        moved = 0.0
        dot = 0.0
        for i in range(n):
            diff = xn[i] - x[i]
            moved = max(moved, abs(diff))
            dot += (y[i] - xn[i]) * diff
        if moved <= tol:
            x[:] = xn
            break
        if dot > 0.0:
            t = 1.0
            y[:] = xn
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            mom = (t - 1.0) / t_next
            for i in range(n):
                y[i] = xn[i] + mom * (xn[i] - x[i])
            t = t_next
        x[:] = xn
    return it, moved
