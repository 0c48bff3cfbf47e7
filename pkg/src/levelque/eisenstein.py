"""Real-analytic Eisenstein series on Gamma_0(q) for q = 1 or q prime.

``E_kappa(z, s)`` is the sum of ``Im(sigma_kappa^-1 gamma z)^s`` over the
cosets of the stabiliser of ``kappa``.  Its expansion at infinity reads

    c_plus y^s + c_minus y^(1-s)
        + sum_{n >= 1} a_n 4 sqrt(n y) K_{s-1/2}(2 pi n y) cos(2 pi n x)

with ``a_n`` a divisor sum over a completed zeta value times a q-local
factor.  The closed forms continue the coefficients to every ``s`` off the
poles; the coset sum itself is kept as an oracle for ``Re(s) >= 1.5``.
Points below the fundamental domain are handled by reduction and the
Atkin-Lehner relation ``E_inf(sigma_0 v) = E_0(v)``.
"""

import cmath
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .arith import ramanujan_sum, totient_and_omega
from .errors import ConditioningError, DomainError, PoleError
from .halfplane import (
    Cusp,
    HalfPlanePoint,
    check_level,
    cusps,
    gamma0_coset_shift,
    moduli_pattern,
    reduce_to_fundamental_domain,
)
from .specfun import as_complex, bessel_k_array, completed_zeta, divisor_sigma_range, log_gamma, zeta

CONDITIONING_MARGIN = 1e-3
DEFAULT_TOL = 1e-10
MIN_TOL = 1e-12
ORACLE_SIEVE = 1_000_000


def _point(z):
    if isinstance(z, HalfPlanePoint):
        return z
    return HalfPlanePoint.from_complex(complex(z))


def _check_cusp(q, kappa):
    kappa = Cusp.parse(kappa.value if isinstance(kappa, Cusp) else kappa)
    if kappa not in cusps(q):
        raise DomainError("level 1 has a single cusp (infinity)")
    return kappa


def _qpow(q, w):
    return cmath.exp(w * math.log(q))


# ------------------------------------------------------------ closed forms


def local_factor(q, w, v):
    """Euler factor at ``q`` of ``sum_c c_c(n) c^-w``, for ``v = v_q(n)``.

    ``v=None`` stands for ``n = 0``, where the Ramanujan sums become
    ``phi(q^k)`` and the factor is summed in closed form.
    """
    if v is None:
        return (1 - _qpow(q, -w)) / (1 - _qpow(q, 1 - w))
    return sum(ramanujan_sum(q**k, q**v) * _qpow(q, -k * w) for k in range(v + 2))


def q_correction(q, kappa, w, v):
    """q-local factor of the expansion of ``E_kappa`` at infinity.

    When every allowed modulus is divisible by ``q`` the c-sum keeps only the
    part of the Dirichlet series supported on ``q | c``, i.e. ``(L - 1)/L``;
    when none is, it keeps the part prime to ``q``, i.e. ``1/L``.
    """
    if q == 1:
        return 1.0
    _, divides = moduli_pattern(kappa, Cusp.INFINITY, q)
    big_l = local_factor(q, w, v)
    return (big_l - 1) / big_l if divides else 1 / big_l


def _is_half(s):
    return s == 0.5


def constant_term(q, kappa, s):
    """``(c_plus, c_minus)`` of ``E_kappa`` at infinity."""
    q = check_level(q)
    kappa = _check_cusp(q, kappa)
    s = as_complex(s)
    c_plus = 1.0 + 0j if kappa is Cusp.INFINITY else 0j
    if _is_half(s):
        # limit s -> 1/2: the scattering matrix tends to -identity
        return c_plus, -c_plus
    scale, _ = moduli_pattern(kappa, Cusp.INFINITY, q)
    w = 2 * s
    ratio = completed_zeta(w - 1) / completed_zeta(w)
    return c_plus, complex(ratio * cmath.exp(-w * math.log(scale)) * q_correction(q, kappa, w, None))


def scattering_matrix(q, s):
    """Matrix of ``c_minus`` across cusp pairs, rows indexed by the series' cusp.

    For prime ``q`` this is 2x2 in the order (infinity, zero); for ``q = 1``
    it is 1x1.  Entry ``(k, k')`` is the ``y^(1-s)`` coefficient of
    ``E_k`` at ``k'``, using ``E_k(sigma_0 z) = E_{other k}(z)``.
    """
    q = check_level(q)
    labels = cusps(q)
    out = np.empty((len(labels), len(labels)), dtype=np.complex128)
    for i, k in enumerate(labels):
        for j, k2 in enumerate(labels):
            # expansion of E_k at k2 equals expansion of E_{k or other} at infinity
            src = k if k2 is Cusp.INFINITY else k.other
            out[i, j] = constant_term(q, src, s)[1]
    return out


@dataclass(frozen=True)
class FourierExpansion:
    """Constant term and the first ``truncation`` mode coefficients at infinity."""

    level: int
    cusp: Cusp
    s: complex
    c_plus: complex
    c_minus: complex
    coefficients: tuple  # a_1, ..., a_N

    @property
    def truncation(self):
        return len(self.coefficients)

    def mode(self, n):
        n = int(n)
        if n == 0 or abs(n) > self.truncation:
            raise DomainError(f"mode {n} outside 1 <= |n| <= {self.truncation}")
        return self.coefficients[abs(n) - 1]

    @property
    def modes(self):
        out = {}
        for k, a in enumerate(self.coefficients, start=1):
            out[k] = a
            out[-k] = a
        return out


class EisensteinSeries:
    """Evaluator for ``E_kappa(., s)`` on Gamma_0(q).

    Coefficients and per-height mode profiles are cached; the caches only
    grow and every cached value is a pure function of its key, so instances
    may be shared between threads.
    """

    def __init__(self, q, kappa, s):
        self.q = check_level(q)
        self.cusp = _check_cusp(self.q, kappa)
        self.s = as_complex(s)
        s = self.s
        if s == 1 or s == 0:
            raise PoleError(f"Eisenstein series has a pole at s = {s}")
        self.half = _is_half(s)
        if not self.half and abs(zeta(2 * s)) < CONDITIONING_MARGIN:
            raise ConditioningError(f"s = {s} lies within {CONDITIONING_MARGIN} of a zero of zeta(2s)")
        self.c_plus, self.c_minus = constant_term(self.q, self.cusp, s)
        self.scale, _ = moduli_pattern(self.cusp, Cusp.INFINITY, self.q)
        if self.half:
            self._prefactor = 0j
        else:
            self._prefactor = cmath.exp(-2 * s * math.log(self.scale)) / completed_zeta(2 * s)
        self._coef = np.zeros(1, dtype=np.complex128)  # index 0 unused
        self._profiles = {}
        self._lock = threading.Lock()
        self._order = s - 0.5
        self._tau = abs(self._order.imag)
        # |a_n| <= A n^p with d(n) <= 2 sqrt(n) absorbed into A
        self._growth = max(s.real - 1.0, -s.real) + 0.5

    # -- coefficients

    def coefficients(self, n_max):
        """``a_1..a_{n_max}`` as an array indexed from 1 (index 0 unused)."""
        n_max = int(n_max)
        coef = self._coef
        if len(coef) > n_max:
            return coef[: n_max + 1]
        with self._lock:
            if len(self._coef) <= n_max:
                self._coef = self._compute_coefficients(max(n_max, 2 * (len(self._coef) - 1)))
            coef = self._coef
        return coef[: n_max + 1]

    def _compute_coefficients(self, n_max):
        out = np.zeros(n_max + 1, dtype=np.complex128)
        if self.half:
            return out
        s = self.s
        n = np.arange(1, n_max + 1, dtype=np.float64)
        sig = divisor_sigma_range(1 - 2 * s, n_max)[1:]
        vals = self._prefactor * np.exp((s - 1) * np.log(n)) * sig
        if self.q > 1:
            w = 2 * s
            vq = np.zeros(n_max, dtype=np.int64)
            idx = np.arange(1, n_max + 1)
            m = idx.copy()
            while True:
                hit = m % self.q == 0
                if not hit.any():
                    break
                vq[hit] += 1
                m[hit] //= self.q
            corr = np.array([q_correction(self.q, self.cusp, w, int(v)) for v in range(vq.max() + 1)])
            vals = vals * corr[vq]
        out[1:] = vals
        return out

    def expansion(self, n_max):
        coef = self.coefficients(n_max)
        return FourierExpansion(self.q, self.cusp, self.s, self.c_plus, self.c_minus,
                                tuple(complex(a) for a in coef[1:]))

    # -- mode profiles

    def modes_needed(self, y, tol=DEFAULT_TOL):
        """Truncation ``N`` such that the discarded modes at height ``y`` sum to < ``tol``."""
        return len(self.profile(y, tol)) - 1

    def profile(self, y, tol=DEFAULT_TOL):
        """``b_n(y) = a_n 4 sqrt(n y) K_{s-1/2}(2 pi n y)`` for ``n = 1..N(y, tol)``."""
        y = float(y)
        if not y > 0:
            raise DomainError("height must be positive")
        if tol < MIN_TOL:
            raise DomainError(f"tol must be >= {MIN_TOL}")
        key = (y, float(tol))
        got = self._profiles.get(key)
        if got is not None:
            return got
        prof = self._build_profile(y, tol)
        prof.flags.writeable = False
        self._profiles[key] = prof
        return prof

    def _build_profile(self, y, tol):
        if self.half:
            return np.zeros(1, dtype=np.complex128)
        tau, p = self._tau, self._growth
        two_pi_y = 2.0 * math.pi * y
        n_turn = int(math.ceil((tau + 1.0) / two_pi_y))
        block = max(8, n_turn)
        kvals = np.zeros(1, dtype=np.complex128)
        while True:
            n_have = len(kvals) - 1
            n_new = n_have + block
            args = two_pi_y * np.arange(n_have + 1, n_new + 1, dtype=np.float64)
            kvals = np.concatenate([kvals, bessel_k_array(self._order, args)])
            coef = self.coefficients(n_new)
            n = np.arange(1, n_new + 1, dtype=np.float64)
            big_a = float(np.max(np.abs(coef[1:]) / n**p))
            env = big_a * n**p * 4.0 * np.sqrt(n * y) * np.abs(kvals[1:])
            for k in range(max(n_turn, 1), n_new + 1):
                x = two_pi_y * k
                if x <= tau:
                    continue
                rho = math.exp(-two_pi_y * math.sqrt(1.0 - (tau / x) ** 2)) * (1.0 + 1.0 / k) ** (p + 0.5)
                if rho < 1.0 and env[k - 1] / (1.0 - rho) < 0.1 * tol:
                    b = coef[1:k] * 4.0 * np.sqrt(n[: k - 1] * y) * kvals[1:k]
                    return np.concatenate([[0j], b])
            block *= 2

    # -- evaluation

    def value_direct(self, z, tol=DEFAULT_TOL):
        """Sum the expansion at infinity at ``z`` (any height)."""
        z = _point(z)
        if self.half:
            return 0j  # E(., 1/2) vanishes identically
        prof = self.profile(z.y, tol)
        y_s = cmath.exp(self.s * math.log(z.y))
        val = self.c_plus * y_s + self.c_minus * z.y / y_s
        if len(prof) > 1:
            n = np.arange(1, len(prof))
            terms = prof[1:] * np.cos(2.0 * math.pi * n * z.x)
            val += complex(math.fsum(terms.real), math.fsum(terms.imag))
        return complex(val)

    def values_grid(self, xs, ys, tol=DEFAULT_TOL):
        """``E(x_i + i y_j)`` as an array of shape ``(len(ys), len(xs))`` by direct summation."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        out = np.empty((len(ys), len(xs)), dtype=np.complex128)
        if self.half:
            out[:] = 0.0
            return out
        for j, y in enumerate(ys):
            prof = self.profile(float(y), tol)
            y_s = np.exp(self.s * np.log(y))
            row = np.full(len(xs), self.c_plus * y_s + self.c_minus * y / y_s, dtype=np.complex128)
            if len(prof) > 1:
                n = np.arange(1, len(prof), dtype=np.float64)
                row += np.cos(2.0 * math.pi * np.outer(xs, n)) @ prof[1:]
            out[j] = row
        return out

    def value(self, z, tol=DEFAULT_TOL, route="auto"):
        """``E_kappa(z, s)``.

        ``route='direct'`` sums the expansion at infinity at ``z`` itself;
        ``'reduce'`` first moves ``z`` into the fundamental domain and, when
        the reducing matrix leaves Gamma_0(q), switches to the other cusp's
        series; ``'auto'`` uses ``direct`` for ``y >= sqrt(3)/2``.
        """
        z = _point(z)
        if route == "direct" or (route == "auto" and z.y >= math.sqrt(3.0) / 2.0):
            return self.value_direct(z, tol)
        if route not in ("auto", "reduce"):
            raise DomainError(f"unknown route {route!r}")
        w, g = reduce_to_fundamental_domain(z)
        ginv = g.inverse()
        if self.q == 1 or int(ginv.c) % self.q == 0:
            return self.value_direct(w, tol)
        # ginv = gamma S T^j with gamma in Gamma_0(q); S u = sigma_0(u / q)
        j = gamma0_coset_shift(ginv, self.q)
        v = HalfPlanePoint((w.x + j) / self.q, w.y / self.q)
        return eisenstein_series(self.q, self.cusp.other, self.s).value_direct(v, tol)


@lru_cache(maxsize=256)
def _cached_series(q, kappa, s):
    return EisensteinSeries(q, kappa, s)


def eisenstein_series(q, kappa, s):
    """Shared :class:`EisensteinSeries` for ``(q, kappa, s)``."""
    q = check_level(q)
    return _cached_series(q, _check_cusp(q, kappa), as_complex(s))


def cusp_expansion(q, kappa, s, n_max):
    """Expansion of ``E_kappa(., s)`` at infinity truncated at ``n_max`` modes."""
    if int(n_max) < 1:
        raise DomainError("truncation must be positive")
    return eisenstein_series(q, kappa, s).expansion(int(n_max))


def eval_eisenstein(q, kappa, z, s, tol=DEFAULT_TOL, route="auto"):
    return eisenstein_series(q, kappa, s).value(z, tol, route)


def eval_abs2(q, kappa, z, t, tol=DEFAULT_TOL, route="auto"):
    """``|E_kappa(z, 1/2 + i t)|^2``."""
    return abs(eval_eisenstein(q, kappa, z, complex(0.5, float(t)), tol, route)) ** 2


# ------------------------------------------------------------ coset oracle


@dataclass(frozen=True)
class CosetSum:
    value: complex
    tail_bound: float
    bound: float
    window: int


def _gamma_ratio(s):
    # int_R (u^2 + 1)^-s du
    return cmath.exp(0.5 * math.log(math.pi) + log_gamma(s - 0.5) - log_gamma(s))


@lru_cache(maxsize=1)
def _oracle_tables():
    phi, omega = totient_and_omega(ORACLE_SIEVE)
    return phi, np.ldexp(1.0, omega.astype(np.int32))  # 2^omega


def coset_sum_eval(q, kappa, z, s, bound=300, window=3000):
    """Partial coset sum of ``E_kappa(z, s)`` with a rigorous bound on the rest.

    Rows with lower-left modulus ``<= bound`` are summed over the window
    ``|c x + d| <= window``.  Everything else is bounded: the window tails
    termwise, and the rows beyond ``bound`` through their integral
    approximation, whose sum over the moduli is added to the value with the
    Euler-Maclaurin discrepancy counted in the tail.  Needs ``Re(s) >= 1.5``.
    """
    q = check_level(q)
    kappa = _check_cusp(q, kappa)
    s = as_complex(s)
    sig = s.real
    if sig < 1.5:
        raise DomainError("coset sum oracle needs Re(s) >= 1.5")
    z = _point(z)
    x, y = z.x, z.y
    window = int(window)
    if window < 2:
        raise DomainError("window must be at least 2")
    if kappa is Cusp.INFINITY:
        # E_inf: rows (c, d), q | c; E_0: rows (a, b), (a, q) = 1, scaled by q^-s
        pre, c_max = 1.0 + 0j, int(math.floor(bound))
        moduli = [c for c in range(1, c_max + 1) if c % q == 0]
        head = cmath.exp(s * math.log(y))
    else:
        pre, c_max = cmath.exp(-s * math.log(q)), int(math.floor(bound / math.sqrt(q)))
        moduli = [a for a in range(1, c_max + 1) if a % q]
        head = 0j
    if c_max >= ORACLE_SIEVE:
        raise DomainError("bound exceeds the oracle's sieve")

    total = [head]
    tail = 0.0
    row_tail = 2.0 * y**sig * (window - 1.0) ** (1.0 - 2.0 * sig) / (2.0 * sig - 1.0)
    for c in moduli:
        centre = -c * x
        d_lo = int(math.ceil(centre - window))
        d_hi = int(math.floor(centre + window))
        total.append(kernels.coset_row_sum(c, x, y, s.real, s.imag, d_lo, d_hi))
        tail += row_tail

    # rows beyond the bound: integral approximation plus discrepancy
    phi, two_omega = _oracle_tables()
    c_all = np.arange(c_max + 1, ORACLE_SIEVE + 1)
    mask = (c_all % q == 0) if kappa is Cusp.INFINITY else (c_all % q != 0)
    cs = c_all[mask].astype(np.float64)
    main_sum = np.sum(phi[c_all[mask]] * np.exp(-2 * s * np.log(cs)))
    big_b = _gamma_ratio(s)
    total.append(big_b * cmath.exp((1 - s) * math.log(y)) * complex(main_sum))
    c2 = float(ORACLE_SIEVE)
    # beyond the sieve: |sum phi(c) c^-2s| <= sum c^(1-2 sig)
    main_rest = c2 ** (2.0 - 2.0 * sig) / (2.0 * sig - 2.0)
    tail += abs(big_b) * y ** (1.0 - sig) * main_rest
    # sum-versus-integral: total variation of the row summand, per Moebius term
    disc = float(np.sum(two_omega[c_all[mask]] * cs ** (-2.0 * sig)))
    disc += 2.0 * c2 ** (1.5 - 2.0 * sig) / (2.0 * sig - 1.5)
    tail += (abs(s) / sig) * y ** (-sig) * disc
    value = pre * complex(math.fsum(v.real for v in total), math.fsum(v.imag for v in total))
    return CosetSum(value, abs(pre) * tail, float(bound), window)


__all__ = [
    "FourierExpansion", "EisensteinSeries", "CosetSum", "eisenstein_series", "cusp_expansion",
    "eval_eisenstein", "eval_abs2", "coset_sum_eval", "scattering_matrix", "constant_term",
    "local_factor", "q_correction", "CONDITIONING_MARGIN", "DEFAULT_TOL",
]
