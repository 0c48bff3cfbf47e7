"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` line for line and are used when the compiled
extension is unavailable (or when ``LEVELQUE_PURE_PYTHON=1``).
"""

import math

import numpy as np

MAX_HALVINGS = 10
DECAY_LOG = 40.0
# successive trapezoid sums this close mean the finer one is converged far beyond it
STOP_REL = 1e-14


def contour_parameters(nu_re, nu_im, x):
    """Shift ``v``, half-width ``wmax`` and starting step for the K-Bessel contour.

    ``nu_im`` must already be non-negative.
    """
    tau = nu_im
    if tau == 0.0:
        v = 0.0
        top = 0.5 * math.pi
    else:
        delta = min(0.5 * math.pi, max(2.0 / tau, 1e-3))
        v = math.asin(min(tau / x, 1.0))
        v = max(0.0, min(v, 0.5 * math.pi - delta))
        top = 0.5 * math.pi - v
    a = x * math.cos(v)
    sig = abs(nu_re)
    wstar = math.asinh(sig / a)
    peak = -a * math.cosh(wstar) + sig * wstar
    lo, hi = wstar, wstar + 1.0
    while -a * math.cosh(hi) + sig * hi > peak - DECAY_LOG:
        lo, hi = hi, 2.0 * hi + 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if -a * math.cosh(mid) + sig * mid > peak - DECAY_LOG:
            lo = mid
        else:
            hi = mid
    wmax = hi
    h = min(0.5, 2.0 * math.pi / (tau + DECAY_LOG), 1.6 * math.pi * top / (DECAY_LOG + tau * top))
    return v, wmax, 2.0 * h


def _integrand(w, x, nu_re, nu_im, v):
    cv, sv = math.cos(v), math.sin(v)
    re = -x * np.cosh(w) * cv + nu_re * w - nu_im * v
    ph = -x * np.sinh(w) * sv + nu_re * v + nu_im * w
    mag = np.exp(re)
    return mag * np.cos(ph), mag * np.sin(ph), mag


def besselk(nu_re, nu_im, x):
    """K_nu(x) for complex order ``nu`` and ``x > 0`` as a complex number.

    Trapezoidal rule on the line ``Im u = v`` of
    ``K_nu(x) = 1/2 int exp(-x cosh u + nu u) du``, refined by step halving.
    """
    if nu_im < 0.0:
        nu_re, nu_im = -nu_re, -nu_im
    v, wmax, h = contour_parameters(nu_re, nu_im, x)
    m = int(math.ceil(wmax / h))
    w = h * np.arange(-m, m + 1)
    gr, gi, gm = _integrand(w, x, nu_re, nu_im, v)
    sr, si, mass = h * gr.sum(), h * gi.sum(), h * gm.sum()
    for _ in range(MAX_HALVINGS):
        wn = h * (np.arange(-m, m) + 0.5)
        gr, gi, gm = _integrand(wn, x, nu_re, nu_im, v)
        nr = 0.5 * (sr + h * gr.sum())
        ni = 0.5 * (si + h * gi.sum())
        mass = 0.5 * (mass + h * gm.sum())
        h *= 0.5
        m *= 2
        diff = math.hypot(nr - sr, ni - si)
        sr, si = nr, ni
        if diff <= STOP_REL * mass:
            break
    return complex(0.5 * sr, 0.5 * si)


def besselk_array(nu_re, nu_im, xs):
    xs = np.asarray(xs, dtype=np.float64)
    out = np.empty(xs.shape, dtype=np.complex128)
    flat = out.reshape(-1)
    for i, x in enumerate(xs.reshape(-1)):
        flat[i] = besselk(nu_re, nu_im, float(x))
    return out


def coset_row_sum(c, x, y, s_re, s_im, d_lo, d_hi):
    """Sum of ``y^s / |c z + d|^(2s)`` over ``d_lo <= d <= d_hi`` with ``gcd(c, d) = 1``."""
    d = np.arange(d_lo, d_hi + 1, dtype=np.int64)
    if c != 1:
        d = d[np.gcd(d, c) == 1]
    u = c * x + d
    logterm = math.log(y) - np.log(u * u + (c * y) ** 2)
    mag = np.exp(s_re * logterm)
    ph = s_im * logterm
    return complex(math.fsum(mag * np.cos(ph)), math.fsum(mag * np.sin(ph)))
