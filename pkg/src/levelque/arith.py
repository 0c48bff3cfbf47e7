"""Elementary arithmetic: sieves, factorisation, divisors."""

from functools import lru_cache
from math import gcd, isqrt

import numpy as np


@lru_cache(maxsize=8)
def smallest_prime_factor(limit):
    """Array ``spf`` with ``spf[n]`` the least prime dividing ``n`` (``spf[0] = spf[1] = 0``)."""
    limit = max(int(limit), 2)
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = np.nonzero(spf == 0)[0]
    spf[rest] = rest
    spf[:2] = 0
    spf.flags.writeable = False
    return spf


@lru_cache(maxsize=8)
def primes_up_to(limit):
    spf = smallest_prime_factor(limit)
    idx = np.arange(len(spf))
    out = idx[(spf == idx) & (idx >= 2)]
    out.flags.writeable = False
    return out


def is_prime(n):
    n = int(n)
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    return all(n % f for f in range(3, isqrt(n) + 1, 2))


def factorize(n):
    """Prime factorisation of a positive integer as a ``{p: k}`` dict."""
    n = int(n)
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    out = {}
    if n < 2_000_000:
        spf = smallest_prime_factor(max(n, 1 << 16))
        while n > 1:
            p = int(spf[n])
            out[p] = out.get(p, 0) + 1
            n //= p
        return out
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n):
    divs = [1]
    for p, k in factorize(n).items():
        divs = [d * p**e for d in divs for e in range(k + 1)]
    return sorted(divs)


def valuation(n, p):
    """p-adic valuation of a nonzero integer."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("valuation of 0")
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


@lru_cache(maxsize=4)
def totient_and_omega(limit):
    """Euler's phi and the number of distinct prime factors for ``0..limit``."""
    phi = np.arange(limit + 1, dtype=np.float64)
    omega = np.zeros(limit + 1, dtype=np.int64)
    for p in primes_up_to(limit):
        p = int(p)
        phi[p::p] -= phi[p::p] / p
        omega[p::p] += 1
    phi = np.rint(phi)
    phi.flags.writeable = False
    omega.flags.writeable = False
    return phi, omega


@lru_cache(maxsize=4)
def divisor_count(limit):
    d = np.zeros(limit + 1, dtype=np.int64)
    for k in range(1, limit + 1):
        d[k::k] += 1
    d.flags.writeable = False
    return d


def coprime(a, b):
    return gcd(int(a), int(b)) == 1


def mobius(n):
    f = factorize(n)
    if any(k > 1 for k in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def ramanujan_sum(c, n):
    """``c_c(n) = sum over d | gcd(c, n) of mu(c/d) d``; ``n = 0`` gives ``phi(c)``."""
    g = int(c) if n == 0 else gcd(int(c), int(n))
    return sum(mobius(c // d) * d for d in divisors(g))
