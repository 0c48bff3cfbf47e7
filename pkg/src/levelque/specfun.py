"""Special functions: complex-order K-Bessel, zeta, completed zeta, divisor sums.

Gamma is taken from :func:`scipy.special.loggamma`; everything else is
computed here.
"""

import cmath
import math
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, loggamma

from . import kernels
from .arith import divisors
from .errors import CapabilityError, DomainError, PoleError

MAX_BESSEL_ORDER_IM = 100.0
EM_TERMS = 8


def as_complex(value):
    """Coerce to ``complex``, rejecting NaN and infinite components."""
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite complex value {value!r}")
    return z


# ---------------------------------------------------------------- K-Bessel


def bessel_k(order, y):
    """Modified Bessel function ``K_order(y)`` for complex ``order`` and ``y > 0``.

    For purely imaginary order the result is real and returned with zero
    imaginary part.
    """
    nu = as_complex(order)
    y = float(y)
    if not y > 0.0:
        raise DomainError(f"bessel_k needs y > 0, got {y}")
    if abs(nu.imag) > MAX_BESSEL_ORDER_IM:
        raise CapabilityError(f"|Im(order)| = {abs(nu.imag):g} exceeds {MAX_BESSEL_ORDER_IM:g}")
    val = kernels.besselk(nu.real, nu.imag, y)
    if nu.real == 0.0:
        return complex(val.real, 0.0)
    return val


def bessel_k_array(order, ys):
    """Vectorised :func:`bessel_k` over an array of positive arguments."""
    nu = as_complex(order)
    ys = np.asarray(ys, dtype=np.float64)
    if ys.size and not np.all(ys > 0.0):
        raise DomainError("bessel_k needs y > 0")
    if abs(nu.imag) > MAX_BESSEL_ORDER_IM:
        raise CapabilityError(f"|Im(order)| = {abs(nu.imag):g} exceeds {MAX_BESSEL_ORDER_IM:g}")
    out = kernels.besselk_array(nu.real, nu.imag, ys)
    if nu.real == 0.0:
        out = out.real.astype(np.complex128)
    return out


# ------------------------------------------------------------------- zeta


@lru_cache(maxsize=1)
def _em_coefficients():
    # B_{2k} / (2k)! for k = 1..EM_TERMS+1 (the last one bounds the remainder)
    b = bernoulli(2 * EM_TERMS + 2)
    return tuple(float(b[2 * k]) / math.factorial(2 * k) for k in range(1, EM_TERMS + 2))


def _zeta_em(s, n_terms=None):
    """Euler-Maclaurin value of zeta(s) and a bound for the neglected remainder."""
    if n_terms is None:
        n_terms = max(20, int(math.ceil(2.0 * abs(s.imag))))
    n = np.arange(1, n_terms, dtype=np.float64)
    head = np.exp(-s * np.log(n)).sum() if n_terms > 1 else 0.0
    big_n = float(n_terms)
    val = head + big_n ** (1 - s) / (s - 1) + 0.5 * big_n ** (-s)
    coefs = _em_coefficients()
    rising = s  # s (s+1) ... (s+2k-2)
    term = 0.0
    for k in range(1, EM_TERMS + 2):
        term = coefs[k - 1] * rising * big_n ** (-s - 2 * k + 1)
        if k <= EM_TERMS:
            val += term
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return complex(val), abs(term) * abs(s + 2 * EM_TERMS + 1) / max(s.real + 2 * EM_TERMS + 1, 1.0)


def zeta(s):
    """Riemann zeta function for complex ``s != 1``."""
    s = as_complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    if s.real < -0.5:
        # functional equation keeps Euler-Maclaurin in its comfortable range
        w = 1 - s
        return complex(2 ** s * cmath.pi ** (s - 1) * cmath.sin(cmath.pi * s / 2)
                       * cmath.exp(loggamma(w)) * _zeta_em(w)[0])
    return _zeta_em(s)[0]


def zeta_with_bound(s, n_terms=None):
    """``(value, remainder_bound)`` from Euler-Maclaurin with ``n_terms`` summands."""
    s = as_complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    return _zeta_em(s, n_terms)


def log_gamma(s):
    return complex(loggamma(as_complex(s)))


def gamma(s):
    return cmath.exp(log_gamma(s))


def completed_zeta(s):
    """``pi^(-s/2) Gamma(s/2) zeta(s)``; symmetric under ``s -> 1 - s``."""
    s = as_complex(s)
    if s == 0 or s == 1:
        raise PoleError(f"completed zeta has a pole at s = {s}")
    if s.real < 0.5:
        s = 1 - s
    return cmath.exp(-0.5 * s * math.log(math.pi) + log_gamma(0.5 * s)) * zeta(s)


def divisor_sigma(nu, n):
    """``sum_{d | n} d^nu`` for a positive integer ``n``."""
    n = int(n)
    if n < 1:
        raise DomainError("divisor_sigma needs n >= 1")
    nu = as_complex(nu)
    if nu == 0:
        return complex(len(divisors(n)))
    return complex(math.fsum((d**nu).real for d in divisors(n)),
                   math.fsum((d**nu).imag for d in divisors(n)))


def divisor_sigma_range(nu, n_max):
    """``sigma_nu(n)`` for ``n = 1..n_max`` as a complex array (index 0 unused)."""
    nu = as_complex(nu)
    out = np.zeros(n_max + 1, dtype=np.complex128)
    d = np.arange(1, n_max + 1, dtype=np.float64)
    powers = np.exp(nu * np.log(d))
    for k in range(1, n_max + 1):
        out[k::k] += powers[k - 1]
    return out
