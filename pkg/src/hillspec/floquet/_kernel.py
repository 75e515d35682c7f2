"""Batched adaptive Dormand-Prince 5(4) integration of the Hill system.

All energies in a batch share one step sequence, so the potential is evaluated
once per stage and reused across the batch.  Per energy we carry both columns
of the fundamental matrix, a first-order global error bound, the number of
zeros of the Dirichlet column, and an overflow exponent.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_RESCALE = 1e100
_UNIT = 2.0**-52
# per-step threshold never drops below this (relative to |y|); keeps long
# periods from driving the step size into roundoff
_STEP_FLOOR = 64 * _UNIT

STATUS_OK = 0
STATUS_BUDGET = 1


@njit(cache=True, nogil=True)
def _potential(x, const, use_const, w, ca, cb):
    if use_const:
        return const
    s = 0.0
    for j in range(w.shape[0]):
        t = w[j] * x
        s += ca[j] * math.cos(t) + cb[j] * math.sin(t)
    return s


@njit(cache=True, nogil=True)
def _rhs(q, E, y, out):
    n = E.shape[0]
    for i in range(n):
        g = q - E[i]
        out[i, 0] = y[i, 1]
        out[i, 1] = g * y[i, 0]
        out[i, 2] = y[i, 3]
        out[i, 3] = g * y[i, 2]


@njit(cache=True, nogil=True)
def integrate_batch(E, seg_x0, seg_x1, seg_const, seg_use_const, w, ca, cb, tol, tlen, hmax, max_steps):
    """Propagate the identity frame across all segments for every energy in E.

    Returns (Y, err, zeros, scale_exp, n_steps, status, worst_ratio) with
    Y[:, 0:4] = (m11, m21, m12, m22).
    """
    n = E.shape[0]
    y = np.zeros((n, 4))
    for i in range(n):
        y[i, 0] = 1.0
        y[i, 3] = 1.0
    acc = np.zeros(n)
    zeros = np.zeros(n, dtype=np.int64)
    sgn = np.ones(n)
    scale_exp = np.zeros(n, dtype=np.int64)
    k1 = np.empty((n, 4))
    k2 = np.empty((n, 4))
    k3 = np.empty((n, 4))
    k4 = np.empty((n, 4))
    k5 = np.empty((n, 4))
    k6 = np.empty((n, 4))
    k7 = np.empty((n, 4))
    ytmp = np.empty((n, 4))
    ynew = np.empty((n, 4))
    errv = np.empty((n, 4))

    n_steps = 0
    status = STATUS_OK
    worst = 0.0
    h = hmax * 0.25

    for s in range(seg_x0.shape[0]):
        x = seg_x0[s]
        x_end = seg_x1[s]
        cst = seg_const[s]
        uc = seg_use_const[s]
        q = _potential(x, cst, uc, w, ca, cb)
        _rhs(q, E, y, k1)
        while x < x_end:
            if n_steps >= max_steps:
                status = STATUS_BUDGET
                break
            h = min(h, hmax)
            last = False
            if x + h >= x_end:
                h = x_end - x
                last = True

            q2 = _potential(x + _C2 * h, cst, uc, w, ca, cb)
            for i in range(n):
                for c in range(4):
                    ytmp[i, c] = y[i, c] + h * _A21 * k1[i, c]
            _rhs(q2, E, ytmp, k2)
            q3 = _potential(x + _C3 * h, cst, uc, w, ca, cb)
            for i in range(n):
                for c in range(4):
                    ytmp[i, c] = y[i, c] + h * (_A31 * k1[i, c] + _A32 * k2[i, c])
            _rhs(q3, E, ytmp, k3)
            q4 = _potential(x + _C4 * h, cst, uc, w, ca, cb)
            for i in range(n):
                for c in range(4):
                    ytmp[i, c] = y[i, c] + h * (_A41 * k1[i, c] + _A42 * k2[i, c] + _A43 * k3[i, c])
            _rhs(q4, E, ytmp, k4)
            q5 = _potential(x + _C5 * h, cst, uc, w, ca, cb)
            for i in range(n):
                for c in range(4):
                    ytmp[i, c] = y[i, c] + h * (
                        _A51 * k1[i, c] + _A52 * k2[i, c] + _A53 * k3[i, c] + _A54 * k4[i, c]
                    )
            _rhs(q5, E, ytmp, k5)
            q6 = _potential(x + h, cst, uc, w, ca, cb)
            for i in range(n):
                for c in range(4):
                    ytmp[i, c] = y[i, c] + h * (
                        _A61 * k1[i, c] + _A62 * k2[i, c] + _A63 * k3[i, c] + _A64 * k4[i, c] + _A65 * k5[i, c]
                    )
            _rhs(q6, E, ytmp, k6)
            for i in range(n):
                for c in range(4):
                    ynew[i, c] = y[i, c] + h * (
                        _B1 * k1[i, c] + _B3 * k3[i, c] + _B4 * k4[i, c] + _B5 * k5[i, c] + _B6 * k6[i, c]
                    )
            _rhs(q6, E, ynew, k7)

            # error control: local error per unit length, relative to max(1, |y|)
            ratio = 0.0
            for i in range(n):
                ymax = 1.0
                emax = 0.0
                for c in range(4):
                    e = h * (
                        _E1 * k1[i, c] + _E3 * k3[i, c] + _E4 * k4[i, c]
                        + _E5 * k5[i, c] + _E6 * k6[i, c] + _E7 * k7[i, c]
                    )
                    errv[i, c] = e
                    if abs(e) > emax:
                        emax = abs(e)
                    a1 = abs(y[i, c])
                    a2 = abs(ynew[i, c])
                    if a1 > ymax:
                        ymax = a1
                    if a2 > ymax:
                        ymax = a2
                r = emax / (max(tol * (h / tlen), _STEP_FLOOR) * ymax)
                if r > ratio:
                    ratio = r
            n_steps += 1

            if ratio <= 1.0:
                x = x_end if last else x + h
                for i in range(n):
                    ny = 0.0
                    ne = 0.0
                    big = 0.0
                    for c in range(4):
                        y[i, c] = ynew[i, c]
                        k1[i, c] = k7[i, c]
                        ny += ynew[i, c] * ynew[i, c]
                        ne += errv[i, c] * errv[i, c]
                        if abs(ynew[i, c]) > big:
                            big = abs(ynew[i, c])
                    ny = math.sqrt(ny)
                    acc[i] += ny * (math.sqrt(ne) + 4.0 * _UNIT * ny)
                    u = y[i, 2]
                    if u != 0.0:
                        su = 1.0 if u > 0.0 else -1.0
                        if su != sgn[i]:
                            zeros[i] += 1
                            sgn[i] = su
                    if big > _RESCALE:
                        for c in range(4):
                            y[i, c] /= _RESCALE
                            k1[i, c] /= _RESCALE
                        scale_exp[i] += 1
                if ratio > worst:
                    worst = ratio
                fac = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
                h = h * fac
            else:
                h = h * max(0.2, 0.9 * ratio ** -0.2)
        if status != STATUS_OK:
            break

    err = np.empty(n)
    for i in range(n):
        nm = 0.0
        for c in range(4):
            nm += y[i, c] * y[i, c]
        nm = math.sqrt(nm)
        if scale_exp[i] > 0:
            err[i] = np.inf
        else:
            err[i] = nm * acc[i] + 4.0 * _UNIT * nm * nm
    return y, err, zeros, scale_exp, n_steps, status, worst
