"""Regions of the modular surface, hyperbolic measure and adaptive quadrature.

Regions are unions of axis-parallel boxes clipped to the standard
fundamental domain ``F = {|x| <= 1/2, |z| >= 1}``.  Each clipped box is cut
into pieces whose lower edge is either a horizontal segment or an arc of the
unit circle; pieces are mapped to the unit square and integrated with
adaptive tensor Gauss-Legendre panels against ``dx dy / y^2``.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .eisenstein import DEFAULT_TOL, eisenstein_series
from .errors import DomainError, QuadratureBudgetError
from .halfplane import Cusp

GL_ORDER = 8
GL_CHECK = 6
DEFAULT_MAX_PANELS = 20_000


def _unit_rule(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


_RULE = _unit_rule(GL_ORDER)
_CHECK = _unit_rule(GL_CHECK)


# ---------------------------------------------------------------- regions


@dataclass(frozen=True)
class Piece:
    """``{xa <= x <= xb, lower(x) <= y <= hi}`` with ``lower`` a constant or the unit arc."""

    xa: float
    xb: float
    lo: float  # ignored when arc is true
    hi: float
    arc: bool = False

    def lower(self, x):
        if self.arc:
            return np.sqrt(np.maximum(1.0 - x * x, 0.0))
        return np.full_like(np.asarray(x, dtype=np.float64), self.lo)

    def area(self):
        if math.isinf(self.hi):
            inv_hi = 0.0
        else:
            inv_hi = 1.0 / self.hi
        if self.arc:
            return math.asin(self.xb) - math.asin(self.xa) - (self.xb - self.xa) * inv_hi
        return (self.xb - self.xa) * (1.0 / self.lo - inv_hi)


def clip_box(x1, x2, y1, y2):
    """Pieces of ``[x1, x2] x [y1, y2]`` intersected with ``F``."""
    xa, xb = max(x1, -0.5), min(x2, 0.5)
    if xa >= xb or y2 <= y1:
        return []
    pieces = []
    if y2 > 1.0:
        pieces.append(Piece(xa, xb, max(y1, 1.0), y2))
    if y1 < 1.0:
        top = min(y2, 1.0)
        # below y = 1 the domain is |x| >= sqrt(1 - y^2)
        r_top = math.sqrt(1.0 - top * top)
        r_bot = math.sqrt(1.0 - y1 * y1)
        cuts = sorted({xa, xb, *[c for c in (-r_bot, -r_top, r_top, r_bot) if xa < c < xb]})
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (a + b)
            arc_y = math.sqrt(max(1.0 - mid * mid, 0.0))
            if arc_y >= top:
                continue
            if arc_y > y1:
                pieces.append(Piece(a, b, 0.0, top, arc=True))
            else:
                pieces.append(Piece(a, b, y1, top))
    return pieces


def _overlap_area(r1, r2):
    x1, x2 = max(r1[0], r2[0]), min(r1[1], r2[1])
    y1, y2 = max(r1[2], r2[2]), min(r1[3], r2[3])
    if x1 >= x2 or y1 >= y2:
        return 0.0
    return sum(p.area() for p in clip_box(x1, x2, y1, y2))


@dataclass(frozen=True)
class Region:
    """Finite union of boxes ``(x1, x2, y1, y2)``, intersected with ``F``."""

    rectangles: tuple

    def __post_init__(self):
        rects = tuple(tuple(float(v) for v in r) for r in self.rectangles)
        if not rects:
            raise DomainError("region needs at least one rectangle")
        for x1, x2, y1, y2 in rects:
            if not (x1 < x2 and y1 < y2 and y1 > 0):
                raise DomainError(f"invalid rectangle {(x1, x2, y1, y2)}: need x1 < x2, y1 < y2, y1 > 0")
            if not all(math.isfinite(v) for v in (x1, x2, y1)):
                raise DomainError("rectangle edges must be finite (only y2 may be infinite)")
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                if _overlap_area(rects[i], rects[j]) > 0.0:
                    raise DomainError(f"rectangles {i} and {j} overlap inside F")
        object.__setattr__(self, "rectangles", rects)
        if self.area() <= 0.0:
            raise DomainError("region has zero hyperbolic measure inside F")

    @classmethod
    def parse(cls, text):
        """``"x1,x2,y1,y2;x1,x2,y1,y2"`` as used on the command line."""
        try:
            rects = [tuple(float(v) for v in chunk.split(",")) for chunk in text.split(";") if chunk.strip()]
        except ValueError as exc:
            raise DomainError(f"cannot parse region {text!r}: {exc}") from None
        if any(len(r) != 4 for r in rects):
            raise DomainError(f"region {text!r}: each rectangle needs four numbers")
        return cls(tuple(rects))

    def pieces(self):
        return [p for r in self.rectangles for p in clip_box(*r)]

    def area(self):
        return math.fsum(p.area() for p in self.pieces())

    def reflected(self):
        """Mirror image under ``x -> -x``."""
        return Region(tuple((-x2, -x1, y1, y2) for x1, x2, y1, y2 in self.rectangles))

    def __str__(self):
        return ";".join(",".join(f"{v:g}" for v in r) for r in self.rectangles)


FULL_DOMAIN = Region(((-0.5, 0.5, 0.5, math.inf),))


def hyperbolic_area(region):
    return region.area()


# ------------------------------------------------------------ integrator


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


@dataclass(order=True)
class _Panel:
    neg_err: float
    ident: int
    piece: Piece = field(compare=False)
    u: tuple = field(compare=False)
    v: tuple = field(compare=False)
    value: float = field(compare=False)


def _panel_rule(piece, u0, u1, v0, v1, rule):
    nodes, weights = rule
    du, dv = u1 - u0, v1 - v0
    u = u0 + du * nodes
    v = v0 + dv * nodes
    x = piece.xa + (piece.xb - piece.xa) * u
    g = piece.lower(x)
    span = piece.hi - g
    y = g[:, None] + span[:, None] * v[None, :]
    xx = np.broadcast_to(x[:, None], y.shape)
    w = (weights[:, None] * weights[None, :]) * (du * dv * (piece.xb - piece.xa)) * span[:, None]
    return xx, y, w


def _panel_estimate(f, piece, u0, u1, v0, v1):
    x8, y8, w8 = _panel_rule(piece, u0, u1, v0, v1, _RULE)
    x6, y6, w6 = _panel_rule(piece, u0, u1, v0, v1, _CHECK)
    q8 = math.fsum((f(x8, y8) * w8 / (y8 * y8)).ravel())
    q6 = math.fsum((f(x6, y6) * w6 / (y6 * y6)).ravel())
    return q8, abs(q8 - q6)


def integrate(f, pieces, tol=1e-8, initial=(1, 1), max_panels=DEFAULT_MAX_PANELS, abs_floor=0.0):
    """Adaptive integral of ``f(x, y)`` over ``pieces`` against ``dx dy / y^2``.

    ``f`` receives 2-D arrays of coordinates and returns values of the same
    shape.  Panels are order-8 tensor Gauss-Legendre rules with an order-6
    companion as error estimate; the worst panel is split into four until
    the summed estimate is below ``tol`` relative to the integral (or below
    ``abs_floor``).  The result is summed in panel order, so it does not
    depend on how refinement was scheduled.
    """
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    if any(math.isinf(p.hi) for p in pieces):
        raise DomainError("cannot integrate over an unbounded piece")
    heap = []
    ident = 0
    nx, ny = (max(1, int(k)) for k in initial)
    for piece in pieces:
        for i in range(nx):
            for j in range(ny):
                u = (i / nx, (i + 1) / nx)
                v = (j / ny, (j + 1) / ny)
                val, err = _panel_estimate(f, piece, *u, *v)
                heap.append(_Panel(-err, ident, piece, u, v, val))
                ident += 1
    heapq.heapify(heap)

    def totals():
        leaves = sorted(heap, key=lambda p: p.ident)
        return math.fsum(p.value for p in leaves), math.fsum(-p.neg_err for p in leaves)

    value, error = totals()
    steps = 0
    while True:
        if error <= max(tol * abs(value), abs_floor):
            value, error = totals()  # exact, order-fixed sums decide termination
            if error <= max(tol * abs(value), abs_floor):
                break
        if len(heap) + 3 > max_panels:
            value, error = totals()
            raise QuadratureBudgetError(
                f"panel budget {max_panels} exhausted (estimate {value:.12g} +- {error:.3g})", value, error)
        worst = heapq.heappop(heap)
        value -= worst.value
        error += worst.neg_err
        (u0, u1), (v0, v1) = worst.u, worst.v
        um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
        for u in ((u0, um), (um, u1)):
            for v in ((v0, vm), (vm, v1)):
                val, err = _panel_estimate(f, worst.piece, *u, *v)
                heapq.heappush(heap, _Panel(-err, ident, worst.piece, u, v, val))
                ident += 1
                value += val
                error += err
        steps += 1
        if steps % 64 == 0:
            value, error = totals()
    return QuadResult(value, error, len(heap))


def _abs2_integrand(q, kappa, t, eval_tol):
    series = eisenstein_series(q, kappa, complex(0.5, float(t)))

    def f(x, y):
        out = np.empty(y.shape)
        flat_x, flat_y = x.ravel(), y.ravel()
        res = out.reshape(-1)
        ys, inverse = np.unique(flat_y, return_inverse=True)
        for k, yk in enumerate(ys):
            idx = np.nonzero(inverse == k)[0]
            res[idx] = np.abs(series.values_grid(flat_x[idx], [yk], eval_tol)[0]) ** 2
        return out

    return f


def _initial_panels(pieces, t, n_modes):
    width = max(p.xb - p.xa for p in pieces)
    spread = max(math.log(p.hi / max(p.lo if not p.arc else math.sqrt(max(1 - max(p.xa**2, p.xb**2), 0.0)), 1e-3))
                 for p in pieces)
    return (max(1, math.ceil(width * n_modes / 2.0)), max(1, math.ceil(abs(t) * spread / math.pi)))


def _eval_tol(tol):
    return max(min(DEFAULT_TOL, 1e-3 * tol), 1e-12)


def integrate_abs2(q, kappa, t, region, tol=1e-8, integrand=None, max_panels=DEFAULT_MAX_PANELS):
    """``int_region |E_kappa(z, 1/2 + it)|^2 dmu`` by adaptive quadrature.

    ``integrand='constant'`` replaces ``|E|^2`` by 1 (calibration hook).
    """
    if tol < 1e-8:
        raise DomainError("tol must be >= 1e-8")
    pieces = region.pieces()
    if integrand == "constant":
        return integrate(lambda x, y: np.ones_like(y), pieces, tol, max_panels=max_panels)
    if integrand is not None:
        raise DomainError(f"unknown integrand hook {integrand!r}")
    series = eisenstein_series(q, kappa, complex(0.5, float(t)))
    y_min = min(float(np.min(p.lower(np.array([p.xa, p.xb, 0.5 * (p.xa + p.xb)])))) for p in pieces)
    n_modes = series.modes_needed(max(y_min, 0.5), _eval_tol(tol))
    f = _abs2_integrand(q, kappa, t, _eval_tol(tol))
    return integrate(f, pieces, tol, _initial_panels(pieces, t, n_modes), max_panels)


@dataclass(frozen=True)
class QueRatio:
    ratio: float
    target: float
    integral_a: QuadResult
    integral_b: QuadResult


def que_ratio(q, kappa, t, region_a, region_b, tol=1e-8):
    """``int_A |E|^2 / int_B |E|^2`` and ``vol(A) / vol(B)``."""
    ia = integrate_abs2(q, kappa, t, region_a, tol)
    ib = ia if region_b == region_a else integrate_abs2(q, kappa, t, region_b, tol)
    return QueRatio(ia.value / ib.value, region_a.area() / region_b.area(), ia, ib)


def constant_term_ratio(q, kappa, t, region_a, region_b, tol=1e-10):
    """The QUE ratio with ``|E|^2`` replaced by the square of its constant term.

    On ``F`` the non-constant modes of ``E_{q, kappa}`` shrink as ``q``
    grows while the constant term ``y^s + c_minus y^(1-s)`` keeps
    ``|c_minus| ~ 1`` (cusp infinity), so this is the large-``q`` behaviour
    of :func:`que_ratio`.
    """
    series = eisenstein_series(q, kappa, complex(0.5, float(t)))
    s = series.s

    def f(x, y):
        ys = np.exp(s * np.log(y))
        return np.abs(series.c_plus * ys + series.c_minus * y / ys) ** 2

    init = (1, max(1, math.ceil(abs(t))))
    ia = integrate(f, region_a.pieces(), tol, init)
    ib = integrate(f, region_b.pieces(), tol, init)
    return ia.value / ib.value


# -------------------------------------------------------- test functions


def smoothstep(v):
    """C-infinity step: 0 for ``v <= 0``, 1 for ``v >= 1``."""
    v = np.asarray(v, dtype=np.float64)
    a = np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)
    b = np.where(v < 1, np.exp(-1.0 / np.where(v < 1, 1.0 - v, 1.0)), 0.0)
    return a / (a + b)


def _window(u, lo, hi, delta):
    return smoothstep((u - lo) / delta + 0.5) * smoothstep((hi - u) / delta + 0.5)


class TestFunction:
    """A smooth compactly supported function on ``F``, as a sum of terms.

    Each term is ``(coefficient, kind, params)`` with ``kind`` either
    ``"indicator"`` (``params = (box, delta)``) or ``"profile"``
    (``params = (a, b)``, the bump ``exp(-1/(1-u^2))`` in ``y``).
    """

    __test__ = False  # not a pytest class

    def __init__(self, terms):
        self.terms = tuple(terms)
        for _, kind, params in self.terms:
            if kind == "indicator":
                (x1, x2, y1, y2), delta = params
                if not delta > 0:
                    raise DomainError("smoothing width must be positive")
                xa, xb, ya = x1 - delta / 2, x2 + delta / 2, y1 - delta / 2
                near = min(abs(xa), abs(xb)) if xa * xb > 0 else 0.0
                if xa < -0.5 or xb > 0.5 or near * near + ya * ya < 1.0:
                    raise DomainError("smoothed indicator must be supported inside F")
            elif kind == "profile":
                a, b = params
                if not (1.0 <= a < b):
                    raise DomainError("vertical profile needs 1 <= a < b")
            else:
                raise DomainError(f"unknown test-function kind {kind!r}")

    @classmethod
    def smoothed_indicator(cls, region, delta):
        return cls((1.0, "indicator", (tuple(r), float(delta))) for r in region.rectangles)

    @classmethod
    def vertical_profile(cls, a, b, amplitude=1.0):
        return cls([(float(amplitude), "profile", (float(a), float(b)))])

    @classmethod
    def zero(cls):
        return cls([])

    def __add__(self, other):
        return TestFunction(self.terms + other.terms)

    def __mul__(self, c):
        return TestFunction((c * k, kind, p) for k, kind, p in self.terms)

    __rmul__ = __mul__

    @staticmethod
    def _term(kind, params, x, y):
        if kind == "indicator":
            (x1, x2, y1, y2), delta = params
            return _window(x, x1, x2, delta) * _window(y, y1, y2, delta)
        a, b = params
        u = (2.0 * y - a - b) / (b - a)
        inside = np.abs(u) < 1.0
        safe = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros(np.broadcast(x, y).shape)
        for c, kind, params in self.terms:
            out = out + c * self._term(kind, params, x, y)
        return out

    def supports(self):
        """``(coefficient, kind, params, pieces)`` per term; the pieces cover the term's support.

        A smoothed indicator is cut into a 3 x 3 grid so that each transition
        band of width ``delta`` gets panels of its own; otherwise a coarse
        panel whose nodes all sit on the plateau reports a spuriously small
        error.
        """
        out = []
        for c, kind, params in self.terms:
            if kind == "indicator":
                (x1, x2, y1, y2), delta = params
                h = delta / 2
                xs = (x1 - h, x1 + h, x2 - h, x2 + h) if x2 - x1 > delta else (x1 - h, x2 + h)
                ys = (y1 - h, y1 + h, y2 - h, y2 + h) if y2 - y1 > delta else (y1 - h, y2 + h)
                pieces = [Piece(xa, xb, ya, yb) for xa, xb in zip(xs[:-1], xs[1:])
                          for ya, yb in zip(ys[:-1], ys[1:])]
            else:
                a, b = params
                pieces = [Piece(-0.5, 0.5, a, b)]
            out.append((c, kind, params, pieces))
        return out

    def mass(self, tol=1e-12):
        """``int phi dmu``."""
        total = []
        for c, kind, params, pieces in self.supports():
            f = (lambda kind, params: lambda x, y: self._term(kind, params, x, y))(kind, params)
            total.append(c * integrate(f, pieces, tol, initial=(2, 2), abs_floor=1e-15).value)
        return math.fsum(total)


def default_test_function():
    """Unit-mass vertical bump on ``1.25 <= y <= 2.75``."""
    phi = TestFunction.vertical_profile(1.25, 2.75)
    return phi * (1.0 / phi.mass())


def inner_product_phi(q, kappa, t, phi, tol=1e-8, max_panels=DEFAULT_MAX_PANELS):
    """``int phi |E_kappa(z, 1/2 + it)|^2 dmu`` over the support of ``phi``."""
    if tol < 1e-8:
        raise DomainError("tol must be >= 1e-8")
    pieces = phi.supports()
    if not pieces:
        return QuadResult(0.0, 0.0, 0)
    series = eisenstein_series(q, kappa, complex(0.5, float(t)))
    eval_tol = _eval_tol(tol)
    abs2 = _abs2_integrand(q, kappa, t, eval_tol)
    values, errors, panels = [], [], 0
    for c, kind, params, boxes in pieces:
        n_modes = series.modes_needed(min(b.lo for b in boxes), eval_tol)
        f = (lambda kind, params: lambda x, y: TestFunction._term(kind, params, x, y) * abs2(x, y))(kind, params)
        res = integrate(f, boxes, tol, _initial_panels(boxes, t, n_modes), max_panels)
        values.append(c * res.value)
        errors.append(abs(c) * res.error)
        panels += res.panels
    return QuadResult(math.fsum(values), math.fsum(errors), panels)


@dataclass(frozen=True)
class LuoSarnakScan:
    rows: tuple  # (t, lhs, predicted)
    slope: float
    normalized_slope: float  # slope / int phi dmu, to compare with 3/pi
    mass: float


def luo_sarnak_scan(t_values, phi=None, tol=1e-6, q=1):
    """``<|E(., 1/2+it)|^2, phi>`` over ``t`` with the least-squares slope against ``log(1/4 + t^2)``."""
    phi = default_test_function() if phi is None else phi
    mass = phi.mass()
    rows = []
    for t in t_values:
        lhs = inner_product_phi(q, Cusp.INFINITY, t, phi, tol).value
        rows.append((float(t), lhs, 3.0 / math.pi * math.log(0.25 + t * t) * mass))
    x = np.array([math.log(0.25 + r[0] ** 2) for r in rows])
    y = np.array([r[1] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else float("nan")
    return LuoSarnakScan(tuple(rows), slope, slope / mass if mass else float("nan"), mass)


__all__ = [
    "Region", "Piece", "TestFunction", "QuadResult", "QueRatio", "LuoSarnakScan", "FULL_DOMAIN",
    "clip_box", "constant_term_ratio", "hyperbolic_area", "integrate", "integrate_abs2", "que_ratio", "smoothstep",
    "default_test_function", "inner_product_phi", "luo_sarnak_scan",
]
