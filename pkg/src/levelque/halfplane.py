"""Upper half-plane geometry, SL2(Z), Gamma_0(q), cusps and scaling matrices."""

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

from .arith import is_prime
from .errors import DomainError, MapsToCuspError

SQRT3_2 = math.sqrt(3.0) / 2.0
_ARC_EPS = 1e-14


@dataclass(frozen=True)
class HalfPlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError("point coordinates must be finite")
        if not self.y > 0:
            raise DomainError(f"upper half-plane point needs y > 0, got y = {self.y}")

    @classmethod
    def from_complex(cls, z):
        return cls(float(z.real), float(z.imag))

    @property
    def z(self):
        return complex(self.x, self.y)


@dataclass(frozen=True)
class GroupElement:
    """A 2x2 matrix ``(a, b; c, d)`` with nonzero determinant."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.det == 0:
            raise DomainError("matrix is singular")

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def is_integral(self):
        return all(isinstance(e, int) for e in (self.a, self.b, self.c, self.d))

    def __matmul__(self, other):
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self):
        det = self.det
        if self.is_integral and det == 1:
            return GroupElement(self.d, -self.b, -self.c, self.a)
        return GroupElement(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __call__(self, z):
        return mobius_act(self, z)


IDENTITY = GroupElement(1, 0, 0, 1)
S = GroupElement(0, -1, 1, 0)
T = GroupElement(1, 1, 0, 1)


def translation(k):
    return GroupElement(1, int(k), 0, 1)


class Cusp(enum.Enum):
    INFINITY = "inf"
    ZERO = "zero"

    @property
    def other(self):
        return Cusp.ZERO if self is Cusp.INFINITY else Cusp.INFINITY

    @classmethod
    def parse(cls, label):
        key = str(label).strip().lower()
        if key in ("inf", "infinity", "oo", "i*inf", "iinf"):
            return cls.INFINITY
        if key in ("zero", "0"):
            return cls.ZERO
        raise DomainError(f"unknown cusp {label!r}; use 'inf' or 'zero'")


def check_level(q):
    q = int(q)
    if q != 1 and not is_prime(q):
        raise DomainError("level must be 1 or prime")
    return q


def cusps(q):
    return (Cusp.INFINITY,) if check_level(q) == 1 else (Cusp.INFINITY, Cusp.ZERO)


def mobius_act(g, z):
    """Image of ``z`` under ``g`` (which must have positive determinant)."""
    if isinstance(z, complex):
        z = HalfPlanePoint.from_complex(z)
    det = g.det
    if det <= 0:
        raise DomainError("Moebius action needs det(g) > 0")
    zc = z.z
    den = g.c * zc + g.d
    if den == 0:
        raise MapsToCuspError("c z + d = 0: point is sent to the cusp at infinity")
    w = (g.a * zc + g.b) / den
    return HalfPlanePoint(w.real, det * z.y / abs(den) ** 2)


def reduce_to_fundamental_domain(z):
    """Reduce ``z`` into the standard fundamental domain of SL2(Z).

    Returns ``(z_reduced, g)`` with ``g`` in SL2(Z) and ``g z = z_reduced``.
    The left edge ``x = -1/2`` and the left half of the unit arc belong to
    the domain; their right-hand mirror images do not.
    """
    if isinstance(z, complex):
        z = HalfPlanePoint.from_complex(z)
    x, y = z.x, z.y
    a, b, c, d = 1, 0, 0, 1
    for _ in range(10_000):
        k = math.floor(x + 0.5)
        if k:
            x -= k
            a, b = a - k * c, b - k * d
        r2 = x * x + y * y
        if r2 < 1.0 - _ARC_EPS or (r2 <= 1.0 + _ARC_EPS and x > 0.0):
            # z -> -1/z
            x, y = -x / r2, y / r2
            a, b, c, d = -c, -d, a, b
            continue
        break
    else:  # pragma: no cover - the loop provably terminates
        raise RuntimeError("reduction did not terminate")
    if x >= 0.5:
        x -= 1.0
        a, b = a - c, b - d
    return HalfPlanePoint(x, y), GroupElement(a, b, c, d)


def in_fundamental_domain(z):
    r2 = z.x * z.x + z.y * z.y
    if not (-0.5 <= z.x < 0.5):
        return False
    if r2 < 1.0 - _ARC_EPS:
        return False
    return not (r2 <= 1.0 + _ARC_EPS and z.x > 0.0)


def is_in_gamma0(g, q):
    """True iff ``g`` is an integer matrix of determinant 1 with ``q | c``."""
    entries = (g.a, g.b, g.c, g.d)
    if not all(float(e).is_integer() for e in entries):
        return False
    a, b, c, d = (int(e) for e in entries)
    return a * d - b * c == 1 and c % int(q) == 0


def scaling_matrix(cusp, q):
    """Determinant-one matrix sending infinity to ``cusp`` with unit cusp width."""
    q = check_level(q)
    if cusp is Cusp.INFINITY:
        return IDENTITY
    if q == 1:
        raise DomainError("level 1 has a single cusp; no scaling matrix for cusp 0")
    r = math.sqrt(q)
    return GroupElement(0.0, -1.0 / r, r, 0.0)


def fricke(q):
    """The Atkin-Lehner involution of prime level, equal to the scaling matrix of cusp 0."""
    return scaling_matrix(Cusp.ZERO, q)


def _lower_left(kappa, kappa2, a, b, c, d, q):
    """Lower-left entry of ``sigma_kappa^-1 (a b; c d) sigma_kappa2`` as ``(integer, radical)``.

    The value is ``integer * sqrt(q)`` when ``radical`` is true, else ``integer``.
    """
    if kappa is Cusp.INFINITY and kappa2 is Cusp.INFINITY:
        return c, False
    if kappa is Cusp.INFINITY:
        return d, True
    if kappa2 is Cusp.INFINITY:
        return -a, True
    return -b * q, False


def allowed_moduli(kappa, kappa2, q, bound, entry_bound=None):
    """Positive lower-left entries ``<= bound`` occurring in ``sigma_k^-1 Gamma_0(q) sigma_k2``.

    Bounded search over Gamma_0(q): lower rows ``(c, d)`` with ``q | c`` and
    ``|c|, |d| <= M``, completed to determinant one and shifted along the row
    so that every ``a`` with ``|a| <= M`` occurs.  The default
    ``M = 2 bound sqrt(q)`` makes the search exhaustive.
    """
    q = check_level(q)
    if not bound > 0:
        raise DomainError("bound must be positive")
    if q == 1 and Cusp.ZERO in (kappa, kappa2):
        raise DomainError("level 1 has a single cusp")
    if entry_bound is None:
        m = int(math.ceil(2.0 * bound * math.sqrt(q))) + 1
    else:
        m = int(entry_bound)
    rq = math.sqrt(q)
    found = set()

    def record(val, radical):
        val = abs(val)
        if val == 0:
            return
        x = val * rq if radical else float(val)
        if x <= bound * (1 + 1e-12):
            found.add((val, radical))

    # c = 0: the translations +-(1, b; 0, 1)
    for b in range(-m, m + 1):
        record(*_lower_left(kappa, kappa2, 1, b, 0, 1, q))
    for c in range(q, m + 1, q):
        for d in range(-m, m + 1):
            if gcd(c, d) != 1:
                continue
            a0 = pow(d, -1, c) if c > 1 else 0
            b0 = (a0 * d - 1) // c
            # all completions: (a0 + k c, b0 + k d)
            k_lo = -((m + a0) // c) - 1
            k_hi = (m - a0) // c + 1
            for k in range(k_lo, k_hi + 1):
                a, b = a0 + k * c, b0 + k * d
                val, radical = _lower_left(kappa, kappa2, a, b, c, d, q)
                record(val, radical)
    return sorted(v * rq if r else float(v) for v, r in found)


@lru_cache(maxsize=None)
def moduli_pattern(kappa, kappa2, q):
    """Describe ``allowed_moduli(kappa, kappa2, q, .)`` as ``(scale, q_divides)``.

    Every allowed modulus is ``scale * m`` for a positive integer ``m``, and
    ``q | m`` holds for all of them (``q_divides = True``) or for none.
    Read off an enumeration covering ``m <= 2q + 1``; raises if the
    enumeration is irregular.  Level 1 gives ``(1.0, False)``.
    """
    q = check_level(q)
    if q == 1:
        return 1.0, False
    scale = 1.0
    vals = allowed_moduli(kappa, kappa2, q, (2 * q + 1) * math.sqrt(q), entry_bound=2 * q + 2)
    ints = [v / math.sqrt(q) for v in vals]
    if all(abs(v - round(v)) < 1e-9 for v in ints) and not all(abs(v - round(v)) < 1e-9 for v in vals):
        scale = math.sqrt(q)
        ms = [round(v) for v in ints]
    else:
        ms = [round(v) for v in vals]
    divisible = [m % q == 0 for m in ms]
    if all(divisible):
        expected = list(range(q, max(ms) + 1, q))
        flag = True
    elif not any(divisible):
        expected = [m for m in range(1, max(ms) + 1) if m % q]
        flag = False
    else:
        raise RuntimeError("allowed moduli are neither all nor none divisible by q")
    if ms != expected:
        raise RuntimeError("allowed moduli do not form a full residue pattern")
    return scale, flag


def cusp_stabilizer_generator(cusp, q):
    """Generator of the stabiliser of ``cusp`` in Gamma_0(q) (up to sign)."""
    q = check_level(q)
    if cusp is Cusp.INFINITY:
        return T
    return GroupElement(1, 0, q, 1)


def gamma0_coset_shift(g, q):
    """For ``g`` in SL2(Z) not in Gamma_0(q), the ``j`` with ``g = gamma S T^j``, gamma in Gamma_0(q)."""
    c, d = int(g.c), int(g.d)
    if c % q == 0:
        raise DomainError("element already lies in Gamma_0(q)")
    return (d * pow(c, -1, q)) % q


def random_gamma0(rng, q, max_entry=50):
    """A random element of Gamma_0(q) with entries bounded by ``max_entry``."""
    while True:
        c = q * int(rng.integers(-(max_entry // q), max_entry // q + 1))
        d = int(rng.integers(-max_entry, max_entry + 1))
        if gcd(c, d) != 1:
            continue
        if c == 0:
            return GroupElement(d, int(rng.integers(-max_entry, max_entry + 1)), 0, d)
        a0 = pow(d, -1, abs(c)) if abs(c) > 1 else 0
        cands = [a for a in range(a0 - abs(c) * (max_entry // abs(c) + 1), max_entry + 1, abs(c))
                 if abs(a) <= max_entry and abs((a * d - 1) // c) <= max_entry]
        if not cands:
            continue
        a = cands[int(rng.integers(len(cands)))]
        return GroupElement(a, (a * d - 1) // c, c, d)


__all__ = [
    "HalfPlanePoint", "GroupElement", "Cusp", "IDENTITY", "S", "T", "SQRT3_2",
    "mobius_act", "reduce_to_fundamental_domain", "in_fundamental_domain",
    "is_in_gamma0", "scaling_matrix", "allowed_moduli", "moduli_pattern",
    "check_level", "cusps", "fricke", "translation", "cusp_stabilizer_generator",
    "gamma0_coset_shift", "random_gamma0",
]
