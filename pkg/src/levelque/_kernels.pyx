# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: complex-order K-Bessel and coset-sum rows."""

from libc.math cimport exp, cos, sin, cosh, sinh, asin, asinh, log, ceil, fabs, sqrt, M_PI

DEF MAX_HALVINGS = 10
DEF DECAY_LOG = 40.0
DEF STOP_REL = 1e-14


cdef void _params(double nu_re, double tau, double x,
                  double *v, double *wmax, double *h) noexcept nogil:
    cdef double delta, top, a, sig, wstar, peak, lo, hi, mid, vv
    cdef int i
    if tau == 0.0:
        vv = 0.0
        top = 0.5 * M_PI
    else:
        delta = 2.0 / tau
        if delta < 1e-3:
            delta = 1e-3
        if delta > 0.5 * M_PI:
            delta = 0.5 * M_PI
        vv = asin(tau / x) if tau < x else 0.5 * M_PI
        if vv > 0.5 * M_PI - delta:
            vv = 0.5 * M_PI - delta
        if vv < 0.0:
            vv = 0.0
        top = 0.5 * M_PI - vv
    a = x * cos(vv)
    sig = fabs(nu_re)
    wstar = asinh(sig / a)
    peak = -a * cosh(wstar) + sig * wstar
    lo = wstar
    hi = wstar + 1.0
    while -a * cosh(hi) + sig * hi > peak - DECAY_LOG:
        lo = hi
        hi = 2.0 * hi + 1.0
    for i in range(60):
        mid = 0.5 * (lo + hi)
        if -a * cosh(mid) + sig * mid > peak - DECAY_LOG:
            lo = mid
        else:
            hi = mid
    v[0] = vv
    wmax[0] = hi
    h[0] = 0.5
    if 2.0 * M_PI / (tau + DECAY_LOG) < h[0]:
        h[0] = 2.0 * M_PI / (tau + DECAY_LOG)
    if 1.6 * M_PI * top / (DECAY_LOG + tau * top) < h[0]:
        h[0] = 1.6 * M_PI * top / (DECAY_LOG + tau * top)
    h[0] = 2.0 * h[0]


cdef void _accumulate(double x, double nu_re, double nu_im, double v, double h,
                      long k0, long k1, double shift,
                      double *sr, double *si, double *sm) noexcept nogil:
    cdef double cv = 0.5 * x * cos(v), sv = 0.5 * x * sin(v), w, ew, iw, re, ph, mag
    cdef double base = -nu_im * v, ar = 0.0, ai = 0.0, am = 0.0
    cdef long k
    for k in range(k0, k1):
        w = h * (k + shift)
        ew = exp(w)
        iw = 1.0 / ew
        re = base - (ew + iw) * cv + nu_re * w
        if re < -745.0:
            continue
        ph = -(ew - iw) * sv + nu_re * v + nu_im * w
        mag = exp(re)
        ar += mag * cos(ph)
        ai += mag * sin(ph)
        am += mag
    sr[0] = ar
    si[0] = ai
    sm[0] = am


cdef double complex _besselk(double nu_re, double nu_im, double x) noexcept nogil:
    cdef double v, wmax, h, sr, si, mass, gr, gi, gm, nr, ni, diff
    cdef long m
    cdef int it
    if nu_im < 0.0:
        nu_re = -nu_re
        nu_im = -nu_im
    _params(nu_re, nu_im, x, &v, &wmax, &h)
    m = <long>ceil(wmax / h)
    _accumulate(x, nu_re, nu_im, v, h, -m, m + 1, 0.0, &gr, &gi, &gm)
    sr = h * gr
    si = h * gi
    mass = h * gm
    for it in range(MAX_HALVINGS):
        _accumulate(x, nu_re, nu_im, v, h, -m, m, 0.5, &gr, &gi, &gm)
        nr = 0.5 * (sr + h * gr)
        ni = 0.5 * (si + h * gi)
        mass = 0.5 * (mass + h * gm)
        h *= 0.5
        m *= 2
        diff = sqrt((nr - sr) * (nr - sr) + (ni - si) * (ni - si))
        sr = nr
        si = ni
        if diff <= STOP_REL * mass:
            break
    return 0.5 * sr + 0.5j * si


def besselk(double nu_re, double nu_im, double x):
    """K_nu(x) for complex order and ``x > 0``; see ``_kernels_py.besselk``."""
    return complex(_besselk(nu_re, nu_im, x))


def besselk_array(double nu_re, double nu_im, xs):
    import numpy as np
    arr = np.ascontiguousarray(xs, dtype=np.float64)
    out = np.empty(arr.shape, dtype=np.complex128)
    cdef double[::1] src = arr.reshape(-1)
    cdef double complex[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _besselk(nu_re, nu_im, src[i])
    return out


cdef inline long _gcd(long a, long b) noexcept nogil:
    cdef long t
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        t = a % b
        a = b
        b = t
    return a


def coset_row_sum(long c, double x, double y, double s_re, double s_im, long d_lo, long d_hi):
    """Sum of ``y^s / |c z + d|^(2s)`` over ``d_lo <= d <= d_hi``, ``gcd(c, d) = 1``."""
    cdef double ar = 0.0, ai = 0.0, u, lt, mag, ly = log(y), cy2 = (c * y) * (c * y)
    cdef long d
    with nogil:
        for d in range(d_lo, d_hi + 1):
            if c != 1 and _gcd(c, d) != 1:
                continue
            u = c * x + d
            lt = ly - log(u * u + cy2)
            mag = exp(s_re * lt)
            ar += mag * cos(s_im * lt)
            ai += mag * sin(s_im * lt)
    return complex(ar, ai)
