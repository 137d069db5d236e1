"""Numba kernels for coherent field summation.

Each output point is an independent, fixed-order sum over elements, so the
prange parallelization is bitwise deterministic for any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# Rational approximations for the Bessel function J1 (Cephes j1.c,
# double-precision coefficients; peak error ~3e-16 on [0, 30]).
_RP1 = (-8.99971225705559398224e8, 4.52228297998194034323e11,
        -7.27494245221818276015e13, 3.68295732863852883286e15)
_RQ1 = (6.20836478118054335476e2, 2.56987256757748830383e5,
        8.35146791431949253037e7, 2.21511595479792499675e10,
        4.74914122079991414898e12, 7.84369607876235854894e14,
        8.95222336184627338078e16, 5.32278620332680085395e18)
_PP1 = (7.62125616208173112003e-4, 7.31397056940917570436e-2,
        1.12719608129684925192e0, 5.11207951146807644818e0,
        8.42404590141772420927e0, 5.21451598682361504063e0,
        1.00000000000000000254e0)
_PQ1 = (5.71323128072548699714e-4, 6.88455908754495404082e-2,
        1.10514232634061696926e0, 5.07386386128601488557e0,
        8.39985554327604159757e0, 5.20982848682361821619e0,
        9.99999999999999997461e-1)
_QP1 = (5.10862594750176621635e-2, 4.98213872951233449420e0,
        7.58238284132545283818e1, 3.66779609360150777800e2,
        7.10856304998926107277e2, 5.97489612400613639965e2,
        2.11688757100572135698e2, 2.52070205858023719784e1)
_QQ1 = (7.42373277035675149943e1, 1.05644886038262816351e3,
        4.98641058337653607651e3, 9.56231892404756170795e3,
        7.99704160447350683650e3, 2.82619278517639096600e3,
        3.36093607810698293419e2)
_Z1 = 1.46819706421238932572e1
_Z2 = 4.92184563216946036703e1
_SQ2OPI = 7.9788456080286535587989e-1
_THPIO4 = 2.35619449019234492885


@njit(cache=True)
def bessel_j1(x: float) -> float:
    """J1(x) for scalar x, usable inside jitted kernels."""
    sign = 1.0
    if x < 0.0:
        x = -x
        sign = -1.0
    if x <= 5.0:
        z = x * x
        num = _RP1[0]
        for c in _RP1[1:]:
            num = num * z + c
        den = z + _RQ1[0]
        for c in _RQ1[1:]:
            den = den * z + c
        w = num / den
        return sign * w * x * (z - _Z1) * (z - _Z2)
    w = 5.0 / x
    z = w * w
    pn = _PP1[0]
    for c in _PP1[1:]:
        pn = pn * z + c
    pd = _PQ1[0]
    for c in _PQ1[1:]:
        pd = pd * z + c
    qn = _QP1[0]
    for c in _QP1[1:]:
        qn = qn * z + c
    qd = z + _QQ1[0]
    for c in _QQ1[1:]:
        qd = qd * z + c
    p = pn / pd
    q = qn / qd
    xn = x - _THPIO4
    p = p * np.cos(xn) - w * q * np.sin(xn)
    return sign * p * _SQ2OPI / np.sqrt(x)


@njit(cache=True)
def piston_gain(sin_theta: float, ka: float) -> float:
    """Far-field piston directivity 2*J1(ka*sin)/(ka*sin), with the on-axis limit."""
    x = ka * sin_theta
    if x < 1e-8:
        return 1.0
    return 2.0 * bessel_j1(x) / x


@njit(parallel=True, cache=True)
def pressure_sums(points, positions, normals, amplitudes, phases,
                  k, dir_kind, ka, min_dist):
    """Coherent pressure sums at `points`.

    dir_kind: 0 = omnidirectional, 1 = piston with product ka.
    Returns (re, im, valid); invalid points (closer than min_dist to an
    element) get NaN sums.
    """
    n = points.shape[0]
    m = positions.shape[0]
    out_re = np.empty(n)
    out_im = np.empty(n)
    valid = np.ones(n, dtype=np.bool_)
    for i in prange(n):
        qx = points[i, 0]
        qy = points[i, 1]
        qz = points[i, 2]
        re = 0.0
        im = 0.0
        ok = True
        if dir_kind == 0:
            for e in range(m):
                dx = qx - positions[e, 0]
                dy = qy - positions[e, 1]
                dz = qz - positions[e, 2]
                d = np.sqrt(dx * dx + dy * dy + dz * dz)
                if d < min_dist:
                    ok = False
                    break
                ph = k * d + phases[e]
                a = amplitudes[e] / d
                re += a * np.cos(ph)
                im += a * np.sin(ph)
        else:
            for e in range(m):
                dx = qx - positions[e, 0]
                dy = qy - positions[e, 1]
                dz = qz - positions[e, 2]
                d = np.sqrt(dx * dx + dy * dy + dz * dz)
                if d < min_dist:
                    ok = False
                    break
                cos_t = (dx * normals[e, 0] + dy * normals[e, 1]
                         + dz * normals[e, 2]) / d
                s2 = 1.0 - cos_t * cos_t
                sin_t = np.sqrt(s2) if s2 > 0.0 else 0.0
                gain = piston_gain(sin_t, ka)
                ph = k * d + phases[e]
                a = amplitudes[e] * gain / d
                re += a * np.cos(ph)
                im += a * np.sin(ph)
        if ok:
            out_re[i] = re
            out_im[i] = im
        else:
            out_re[i] = np.nan
            out_im[i] = np.nan
            valid[i] = False
    return out_re, out_im, valid
