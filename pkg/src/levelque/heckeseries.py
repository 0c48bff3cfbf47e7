"""Synthetic Hecke eigenvalue sequences and Dirichlet-series identities for oldforms.

An oldform ``u(z) = v(qz)`` of prime level ``q`` has coefficients
``rho(n) = q^(1/2) tau(n/q)`` for ``q | n`` and ``0`` otherwise, where
``tau(n) = tau(1) lambda(n)`` and ``lambda`` is the Hecke eigenvalue sequence
of the level-one form ``v``.  Identities for ``sum rho(n) sigma_nu(n) n^-s``
are checked two ways: prime by prime on truncated power series in
``X = p^-s``, and by comparing truncated sums with Euler-product closed forms.
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import divisor_count, factorize, is_prime, primes_up_to, smallest_prime_factor, valuation
from .errors import CapabilityError, DomainError, PoleError
from .specfun import as_complex, completed_zeta, zeta

MAX_THETA = 7.0 / 64.0
TILDE_CONVENTIONS = ("normalized", "raw")
ALPHA_READINGS = ("valuation", "valuation_minus_one")


# ------------------------------------------------------------- sequences


@dataclass(frozen=True, eq=False)
class HeckeSequence:
    """Prime eigenvalues ``lambda(p)`` for ``p <= P`` plus the normalisation ``tau(1)``."""

    primes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    theta: float = 0.0
    tau1: complex = 1.0 + 0j
    seed: int = None

    def __post_init__(self):
        if not 0.0 <= self.theta <= MAX_THETA:
            raise DomainError(f"theta must lie in [0, 7/64], got {self.theta}")
        p = self.primes.astype(np.float64)
        if np.any(np.abs(self.values) > p**self.theta + p**-self.theta + 1e-12):
            raise DomainError("|lambda(p)| exceeds p^theta + p^-theta")
        self.primes.flags.writeable = False
        self.values.flags.writeable = False
        object.__setattr__(self, "_index", {int(q): i for i, q in enumerate(self.primes)})

    @property
    def prime_bound(self):
        return int(self.primes[-1]) if len(self.primes) else 1

    def at_prime(self, p):
        try:
            return float(self.values[self._index[int(p)]])
        except KeyError:
            raise CapabilityError(f"no eigenvalue stored for p = {p}") from None

    def with_prime_values(self, overrides):
        """Copy with some ``lambda(p)`` replaced (e.g. to force ``lambda(q) = 0``)."""
        values = self.values.copy()
        for p, v in overrides.items():
            values[self._index[int(p)]] = v
        return HeckeSequence(self.primes.copy(), values, self.theta, self.tau1, self.seed)


def _sato_tate_angles(rng, size):
    # density (2/pi) sin^2 on [0, pi] by rejection from the uniform law
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        phi = rng.uniform(0.0, math.pi, 2 * need + 16)
        keep = phi[rng.uniform(0.0, 1.0, phi.size) < np.sin(phi) ** 2][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def make_hecke_sequence(seed, prime_bound, theta=0.0, tau1=None):
    """Deterministic synthetic eigenvalues ``lambda(p) = (p^theta + p^-theta) cos(phi_p)``.

    The angles follow the Sato-Tate law.  Unless given, ``tau(1)`` is drawn
    from the same generator as a unit-scale complex number.
    """
    if int(prime_bound) < 2:
        raise DomainError("prime bound must be at least 2")
    rng = np.random.default_rng(int(seed))
    primes = np.array(primes_up_to(int(prime_bound)), dtype=np.int64)
    p = primes.astype(np.float64)
    values = (p**theta + p**-theta) * np.cos(_sato_tate_angles(rng, len(primes)))
    if tau1 is None:
        tau1 = rng.uniform(0.5, 2.0) * cmath.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
    return HeckeSequence(primes, values, float(theta), as_complex(tau1), int(seed))


def prime_power_values(lam_p, k_max):
    """``lambda(p^k)`` for ``k = 0..k_max`` from the Hecke recursion."""
    out = [1.0, lam_p]
    for _ in range(k_max - 1):
        out.append(lam_p * out[-1] - out[-2])
    return out[: k_max + 1]


def lambda_at(seq, n):
    """Multiplicative extension of ``seq`` to a positive integer ``n``."""
    n = int(n)
    if n < 1:
        raise DomainError("lambda_at needs n >= 1")
    val = 1.0
    for p, k in factorize(n).items():
        if p > seq.prime_bound:
            raise CapabilityError(f"prime factor {p} of {n} exceeds the stored bound {seq.prime_bound}")
        val *= prime_power_values(seq.at_prime(p), k)[k]
    return val


def lambda_range(seq, n_max):
    """``lambda(n)`` for ``n = 0..n_max`` (index 0 unused) by a sieve."""
    n_max = int(n_max)
    if n_max > seq.prime_bound:
        # every prime factor of n <= n_max must be stored
        raise CapabilityError(f"n_max = {n_max} exceeds the stored prime bound {seq.prime_bound}")
    spf = smallest_prime_factor(max(n_max, 2))
    lam = np.zeros(n_max + 1)
    if n_max >= 1:
        lam[1] = 1.0
    for n in range(2, n_max + 1):
        p = int(spf[n])
        m, k = n, 0
        while m % p == 0:
            m //= p
            k += 1
        lam[n] = lam[m] * prime_power_values(seq.at_prime(p), k)[k]
    return lam


@dataclass(frozen=True)
class OldformCoefficients:
    underlying: HeckeSequence
    level: int

    def __post_init__(self):
        if not is_prime(self.level):
            raise DomainError("oldform level must be prime")

    def tau(self, n):
        return self.underlying.tau1 * lambda_at(self.underlying, n)

    def tau_tilde(self, convention="normalized"):
        """``tau(q)/tau(1)`` (``normalized``) or ``tau(q)`` itself (``raw``)."""
        if convention == "normalized":
            return complex(self.underlying.at_prime(self.level))
        if convention == "raw":
            return self.tau(self.level)
        raise DomainError(f"unknown tilde convention {convention!r}")

    def rho(self, n):
        n = int(n)
        if n % self.level:
            return 0j
        return math.sqrt(self.level) * self.tau(n // self.level)


# -------------------------------------------------------- formal factors


@dataclass(frozen=True)
class FormalEulerFactor:
    """Power series ``sum c_k X^k`` truncated at order ``K``, with ``X = p^-s``."""

    p: int
    coefficients: tuple

    @property
    def order(self):
        return len(self.coefficients) - 1

    @classmethod
    def from_list(cls, p, coefs, order):
        c = list(coefs)[: order + 1]
        c += [0j] * (order + 1 - len(c))
        return cls(int(p), tuple(complex(v) for v in c))

    def _check(self, other):
        if self.p != other.p or self.order != other.order:
            raise DomainError("formal factors must share prime and order")

    def __add__(self, other):
        self._check(other)
        return FormalEulerFactor(self.p, tuple(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def __sub__(self, other):
        self._check(other)
        return FormalEulerFactor(self.p, tuple(a - b for a, b in zip(self.coefficients, other.coefficients)))

    def scale(self, c):
        return FormalEulerFactor(self.p, tuple(c * a for a in self.coefficients))

    def __mul__(self, other):
        if not isinstance(other, FormalEulerFactor):
            return self.scale(other)
        self._check(other)
        k = self.order
        a, b = self.coefficients, other.coefficients
        return FormalEulerFactor(self.p, tuple(sum(a[i] * b[n - i] for i in range(n + 1)) for n in range(k + 1)))

    def inverse(self):
        a = self.coefficients
        if a[0] == 0:
            raise PoleError("formal series with zero constant term is not invertible")
        out = [1.0 / a[0]]
        for n in range(1, self.order + 1):
            out.append(-sum(a[i] * out[n - i] for i in range(1, n + 1)) / a[0])
        return FormalEulerFactor(self.p, tuple(out))

    def __truediv__(self, other):
        return self * other.inverse()

    def max_deviation(self, other):
        self._check(other)
        return max(abs(a - b) for a, b in zip(self.coefficients, other.coefficients))


def _poly(p, coefs, order):
    return FormalEulerFactor.from_list(p, coefs, order)


def hecke_local_factor(p, lam_p, shift, order):
    """``1/(1 - lambda(p) p^shift X + p^(2 shift) X^2)``: the p-factor of ``L(s - shift)``."""
    ps = complex(p) ** shift
    return _poly(p, [1.0, -lam_p * ps, ps * ps], order).inverse()


def _sigma_local(p, nu, k):
    return sum(complex(p) ** (j * nu) for j in range(k + 1))


def _alpha(reading, v):
    if reading == "valuation":
        return v
    if reading == "valuation_minus_one":
        return max(v - 1, 0)
    raise DomainError(f"unknown alpha reading {reading!r}")


def lhs_local_factor(old, p, nu, order, display=1, alpha="valuation"):
    """p-factor of ``sum rho(n) sigma_nu(n q^-alpha) n^-s`` read off the coefficients.

    For ``p = q`` the common factor ``tau(1) q^(1/2 - s)`` is divided out,
    which shifts the series by one power of ``X``.  ``display=1`` uses
    ``sigma_nu(n)``; ``display=2`` uses ``sigma_nu(n q^-alpha(n))``.
    """
    q = old.level
    nu = as_complex(nu)
    coefs = []
    for k in range(order + 1):
        if p == q:
            n_loc = q ** (k + 1)
            rho = old.rho(n_loc) / (old.underlying.tau1 * math.sqrt(q))
        else:
            n_loc = p**k
            rho = old.rho(q * n_loc) / (old.underlying.tau1 * math.sqrt(q))
        v = valuation(n_loc, p)
        if display == 2 and p == q:
            v -= _alpha(alpha, v)
        coefs.append(rho * _sigma_local(p, nu, v))
    return _poly(p, coefs, order)


def _l_ratio_local(old, p, nu, order):
    # p-factor of L(s, v) L(s - nu, v) / zeta(2s - nu)
    lam = old.underlying.at_prime(p)
    pn = complex(p) ** nu
    return hecke_local_factor(p, lam, 0, order) * hecke_local_factor(p, lam, nu, order) * _poly(
        p, [1.0, 0.0, -pn], order)


def q_bracket(old, nu, order, display=1, tilde="normalized", form="printed", alpha="valuation"):
    """The q-local bracket of the closed form, as a series in ``X = q^-s``.

    ``form='printed'`` gives the brackets exactly as stated in the lemma:
    ``(1 + q^nu - tt q^nu X)/(1 - q^nu X^2)`` for the first display and
    ``(1 + q^nu)(1 - tt q^nu X)/(1 - q^nu X^2)`` for the second, ``tt`` being
    the tilde coefficient.  ``form='derived'`` gives what the coefficients
    actually produce for the second display under the chosen ``alpha``.
    """
    q = old.level
    qn = complex(q) ** as_complex(nu)
    tt = old.tau_tilde(tilde)
    den = _poly(q, [1.0, 0.0, -qn], order).inverse()
    if display == 1:
        return _poly(q, [1.0 + qn, -tt * qn], order) * den
    if form == "printed":
        return _poly(q, [1.0, -tt * qn], order) * den * (1.0 + qn)
    if form != "derived":
        raise DomainError(f"unknown bracket form {form!r}")
    numer = _poly(q, [1.0, -tt * qn, qn * qn], order) * den
    return numer * (1.0 + qn) if alpha == "valuation_minus_one" else numer


def rhs_local_factor(old, p, nu, order, display=1, tilde="normalized", form="printed", alpha="valuation"):
    base = _l_ratio_local(old, p, nu, order)
    if p != old.level:
        return base
    return q_bracket(old, nu, order, display, tilde, form, alpha) * base


@dataclass(frozen=True)
class EulerFactorCheck:
    passed: bool
    max_deviation: float
    per_display: dict


def lemma24_euler_factor_check(old, p, order=10, nu=0.0, displays=(1, 2), tilde="normalized",
                               form="printed", alpha="valuation", tol=1e-12):
    """Compare the p-factors of both sides of each display coefficient by coefficient."""
    if p > old.underlying.prime_bound:
        raise CapabilityError(f"p = {p} exceeds the stored prime bound")
    per = {}
    for d in displays:
        lhs = lhs_local_factor(old, p, nu, order, d, alpha)
        rhs = rhs_local_factor(old, p, nu, order, d, tilde, form, alpha)
        per[d] = lhs.max_deviation(rhs)
    worst = max(per.values())
    return EulerFactorCheck(worst < tol, worst, per)


# ---------------------------------------------------- truncated / closed


def _divisor_sup(eps):
    """``sup_n d(n) / n^eps``, exact: a product of local maxima over small primes."""
    out = 1.0
    for p in primes_up_to(int(2 ** (1.0 / eps)) + 1):
        out *= max((k + 1) / float(p) ** (k * eps) for k in range(64))
    return out


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    tail_bound: float


def _sigma_range(nu, n_max):
    d = np.arange(1, n_max + 1, dtype=np.float64)
    powers = np.exp(nu * np.log(d))
    out = np.zeros(n_max + 1, dtype=np.complex128)
    for k in range(1, n_max + 1):
        out[k::k] += powers[k - 1]
    return out


def lemma24_lhs_truncated(old, s, nu, n_max, display=1, alpha="valuation", majorant_limit=None):
    """``sum_{n <= N} rho(n) sigma_nu(n q^-alpha) n^-s`` with a rigorous tail bound.

    The tail uses ``|lambda(m)| <= d(m) m^theta`` and ``|sigma_nu(n)| <=
    d(n) max(1, n^Re nu)``, summed explicitly up to ``majorant_limit`` and
    bounded analytically beyond it.
    """
    s, nu = as_complex(s), as_complex(nu)
    q = old.level
    seq = old.underlying
    theta = seq.theta
    if s.real < 2.5 or (s - nu.real).real < 1.5:
        raise DomainError("truncated sum needs Re(s) >= 2.5 and Re(s - Re nu) >= 1.5")
    n_max = int(n_max)
    if n_max < q:
        raise DomainError("truncation must be at least the level")
    m_max = n_max // q
    lam = lambda_range(seq, m_max)
    sig = _sigma_range(nu, n_max)
    m = np.arange(1, m_max + 1)
    n = q * m
    if display == 1:
        sv = sig[n]
    else:
        vq = np.zeros(m_max, dtype=np.int64)
        rest = n.copy()
        while True:
            hit = rest % q == 0
            if not hit.any():
                break
            vq[hit] += 1
            rest[hit] //= q
        keep = np.array([v - _alpha(alpha, int(v)) for v in vq])
        sv = sig[rest * q**keep]
    terms = math.sqrt(q) * seq.tau1 * lam[1:] * sv * np.exp(-s * np.log(n.astype(np.float64)))
    value = complex(math.fsum(terms.real), math.fsum(terms.imag))

    # tail: n = q m, m > m_max
    sigma, rnu = s.real, max(nu.real, 0.0)
    limit = int(majorant_limit or max(4 * m_max, 100_000))
    mi = np.arange(m_max + 1, limit + 1)
    mm = mi.astype(np.float64)
    d_m = divisor_count(limit)[m_max + 1 : limit + 1].astype(np.float64)
    vq = np.zeros(len(mi))
    rest = mi.copy()
    while True:
        hit = rest % q == 0
        if not hit.any():
            break
        vq[hit] += 1
        rest[hit] //= q
    d_qm = d_m * (vq + 2.0) / (vq + 1.0)
    nn = q * mm
    bound_terms = math.sqrt(q) * abs(seq.tau1) * d_m * mm**theta * d_qm * nn**rnu * nn**-sigma
    tail = float(np.sum(bound_terms))
    eps = 0.25
    c_eps = _divisor_sup(eps)
    # d(m) d(qm) <= 2 d(m)^2 <= 2 c^2 m^(2 eps); remaining exponent on m
    expo = sigma - rnu - theta - 2 * eps
    if expo <= 1.0:
        raise DomainError("tail not summable at this s, nu")
    tail += (math.sqrt(q) * abs(seq.tau1) * 2 * c_eps**2 * q ** (rnu - sigma)
             * float(limit) ** (1.0 - expo) / (expo - 1.0))
    return SeriesValue(value, tail)


def _l_function_product(seq, s, prime_bound=None):
    """Euler product ``prod_{p <= P} (1 - lambda(p) p^-s + p^-2s)^-1`` and a bound on the rest."""
    s = as_complex(s)
    pb = seq.prime_bound if prime_bound is None else min(prime_bound, seq.prime_bound)
    mask = seq.primes <= pb
    p = seq.primes[mask].astype(np.float64)
    lam = seq.values[mask]
    x = np.exp(-s * np.log(p))
    log_val = -np.sum(np.log(1.0 - lam * x + x * x))
    sigma = s.real - seq.theta
    if sigma <= 1.0:
        raise CapabilityError("Euler product needs Re(s) > 1 + theta")
    # |log L_p| <= sum_k (k+1) p^(k(theta - Re s)) <= 4 p^-sigma once p^-sigma <= 1/2
    big_p = float(pb)
    rest = 4.0 * (big_p ** (1.0 - sigma) / (sigma - 1.0) + big_p**-sigma)
    if big_p**-sigma > 0.5:
        raise CapabilityError("prime bound too small for the Euler-product tail")
    val = cmath.exp(complex(log_val))
    return val, abs(val) * (math.exp(rest) - 1.0)


def l_function(seq, s, prime_bound=None):
    """``L(s, v)`` from the Euler product over stored primes, with an error bound."""
    return SeriesValue(*_l_function_product(seq, s, prime_bound))


def lemma24_rhs_closed(old, s, nu, display=1, tilde="normalized", form="printed", alpha="valuation"):
    """Closed form of the lemma's right-hand side, with a bound from the Euler-product tails."""
    s, nu = as_complex(s), as_complex(nu)
    q = old.level
    qn = complex(q) ** nu
    x = complex(q) ** (-s)
    den = 1.0 - qn * x * x
    if abs(den) < 1e-300:
        raise PoleError("1 - q^(nu - 2s) vanishes")
    tt = old.tau_tilde(tilde)
    if display == 1:
        bracket = (1.0 + qn - tt * qn * x) / den
    elif form == "printed":
        bracket = (1.0 + qn) * (1.0 - tt * qn * x) / den
    else:
        bracket = (1.0 - tt * qn * x + qn * qn * x * x) / den
        if alpha == "valuation_minus_one":
            bracket *= 1.0 + qn
    l1, e1 = _l_function_product(old.underlying, s)
    l2, e2 = _l_function_product(old.underlying, s - nu)
    z = zeta(2 * s - nu)
    pre = old.underlying.tau1 * complex(q) ** (0.5 - s) * bracket / z
    value = pre * l1 * l2
    err = abs(pre) * (e1 * abs(l2) + e2 * abs(l1) + e1 * e2)
    # zeta itself is accurate to ~1e-15 relative
    err += abs(value) * 1e-14
    return SeriesValue(complex(value), err)


# ------------------------------------------------ oldform contribution


@dataclass(frozen=True)
class OldformContribution:
    """Pieces of the oldform combination at level ``q``.

    ``leading`` is ``tau(q) q^(1/2 - 2(s + it)) / (1 - q^-2s)`` times the
    L-ratio; ``bracket`` is the full combination computed from the closed
    forms the coefficients actually satisfy; ``printed`` is the full value of
    the bracket as printed (first display minus the stated second display).
    """

    leading: complex
    bracket: complex
    printed: complex


def oldform_contribution(old, s, t, l_factor=None, alpha="valuation", tilde="normalized"):
    """Leading term and full value of ``(S1 - S2/(1 - q^(-1-2it))) / zhat(1 + 2it)``.

    ``S1`` and ``S2`` are the two lemma series at ``(s - it, nu = -2it)``.
    The q-independent L-ratio ``L(s+it) L(s-it) / (zeta(2s) zhat(1+2it))``
    is computed from Euler products (needs ``Re(s) > 1``) unless
    ``l_factor`` is supplied.
    """
    s = as_complex(s)
    t = float(t)
    q = old.level
    if l_factor is None:
        if s.real <= 1.0 + old.underlying.theta:
            raise CapabilityError("L-ratio from Euler products needs Re(s) > 1 + theta; pass l_factor")
        l1 = l_function(old.underlying, s + 1j * t).value
        l2 = l_function(old.underlying, s - 1j * t).value
        l_factor = l1 * l2 / (zeta(2 * s) * completed_zeta(complex(1.0, 2.0 * t)))
    l_factor = as_complex(l_factor)
    one_m = 1.0 - complex(q) ** (-2 * s)
    if abs(one_m) < 1e-300:
        raise PoleError("1 - q^-2s vanishes")
    tt = old.tau_tilde(tilde)
    tau_q = old.underlying.tau1 * tt if tilde == "normalized" else tt
    cq = complex(q)
    leading = tau_q * cq ** (0.5 - 2 * (s + 1j * t)) / one_m * l_factor
    pre = old.underlying.tau1 * cq ** (0.5 + 1j * t - s) / one_m * l_factor
    a = cq ** (-2j * t)
    x = tt * cq ** (-s - 1j * t)
    r = cq ** (-1 - 2j * t)
    b = cq ** (-2 * s - 2j * t)
    n1 = 1.0 + a - x
    n2_true = 1.0 - x + b
    if alpha == "valuation_minus_one":
        n2_true *= 1.0 + a
    elif alpha != "valuation":
        raise DomainError(f"unknown alpha reading {alpha!r}")
    n2_printed = (1.0 + a) * (1.0 - x)
    return OldformContribution(
        complex(leading),
        complex(pre * (n1 - n2_true / (1.0 - r))),
        complex(pre * (n1 - n2_printed / (1.0 - r))),
    )


def oldform_contribution_215(old, s, t, prime_bound=None, l_factor=None, alpha="valuation"):
    """``(leading, bracket)`` of the corrected oldform computation."""
    del prime_bound  # the Euler products use every stored prime
    c = oldform_contribution(old, s, t, l_factor, alpha)
    return c.leading, c.bracket


def fit_exponent(levels, magnitudes):
    """Least-squares slope of ``log magnitude`` against ``log q``."""
    x = np.log(np.asarray(levels, dtype=np.float64))
    y = np.log(np.asarray(magnitudes, dtype=np.float64))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def decay_scan(levels, seeds, theta=0.0, s=0.5, t=1.0, l_factor=1.0, force_tau_q_zero=False):
    """Geometric-mean ``|leading|`` over seeds at each level and the fitted exponent.

    At ``Re(s) = 1/2`` the L-ratio is q-independent and cannot be reached by
    Euler products, so it is fixed to ``l_factor``.  Averaging the logarithm
    over seeds removes the level-to-level scatter of ``|lambda(q)|``.
    """
    levels = [int(q) for q in levels]
    for q in levels:
        if not is_prime(q):
            raise DomainError("level must be 1 or prime")
    rows = []
    pb = max(levels)
    logs = np.zeros((len(seeds), len(levels)))
    for i, seed in enumerate(sorted(seeds)):
        seq = make_hecke_sequence(seed, pb, theta)
        for j, q in enumerate(levels):
            sq = seq.with_prime_values({q: 0.0}) if force_tau_q_zero else seq
            lead = oldform_contribution(OldformCoefficients(sq, q), s, t, l_factor).leading
            logs[i, j] = math.log(abs(lead)) if lead != 0 else -math.inf
    for j, q in enumerate(levels):
        rows.append((q, float(np.exp(np.mean(logs[:, j])))))
    if force_tau_q_zero:
        return rows, float("nan")
    return rows, fit_exponent([r[0] for r in rows], [r[1] for r in rows])


__all__ = [
    "HeckeSequence", "OldformCoefficients", "FormalEulerFactor", "EulerFactorCheck", "SeriesValue",
    "OldformContribution", "make_hecke_sequence", "lambda_at", "lambda_range", "prime_power_values",
    "lemma24_lhs_truncated", "lemma24_rhs_closed", "lemma24_euler_factor_check",
    "lhs_local_factor", "rhs_local_factor", "q_bracket", "hecke_local_factor", "l_function",
    "oldform_contribution", "oldform_contribution_215", "decay_scan", "fit_exponent",
    "TILDE_CONVENTIONS", "ALPHA_READINGS",
]
