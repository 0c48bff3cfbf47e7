import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levelque.errors import ConditioningError, DomainError, PoleError
from levelque.eisenstein import (
    EisensteinSeries,
    constant_term,
    coset_sum_eval,
    cusp_expansion,
    eisenstein_series,
    eval_abs2,
    eval_eisenstein,
    scattering_matrix,
)
from levelque.halfplane import (
    Cusp,
    GroupElement,
    HalfPlanePoint,
    in_fundamental_domain,
    mobius_act,
    random_gamma0,
)
from levelque.specfun import bessel_k, divisor_sigma

INF, ZERO = Cusp.INFINITY, Cusp.ZERO


def random_points_in_f(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        z = HalfPlanePoint(rng.uniform(-0.5, 0.5), rng.uniform(math.sqrt(3) / 2, 2.5))
        if in_fundamental_domain(z):
            out.append(z)
    return out


# ------------------------------------------------------------ oracle


@pytest.mark.parametrize("q,kappa", [(1, INF), (5, INF), (5, ZERO), (11, INF), (11, ZERO)])
def test_expansion_matches_coset_oracle(q, kappa):
    for z in random_points_in_f(17 + q, 5):
        o = coset_sum_eval(q, kappa, z, 2.0)
        assert abs(eval_eisenstein(q, kappa, z, 2.0) - o.value) <= o.tail_bound + 1e-8


def test_level_one_oracle_against_lattice_box_sum():
    o = coset_sum_eval(1, INF, HalfPlanePoint(0.0, 1.0), 2.0, bound=200)
    c, d = np.meshgrid(np.arange(-200, 201), np.arange(-200, 201))
    keep = np.gcd(c, d) == 1
    box = 0.5 * float(np.sum(1.0 / (c[keep] ** 2 + d[keep] ** 2) ** 2.0))
    # pairs outside the box have c^2 + d^2 > 200^2; their sum is below pi / 199^2
    assert abs(box - o.value.real) <= math.pi / 199**2 + o.tail_bound
    assert abs(o.value.imag) == 0.0


def test_oracle_subset_of_cosets_is_smaller():
    z = HalfPlanePoint(0.0, 1.0)
    v1 = coset_sum_eval(1, INF, z, 2.0).value.real
    v5 = coset_sum_eval(5, INF, z, 2.0).value.real
    assert v5 < v1


def test_oracle_invariance_of_defining_sum():
    g = GroupElement(1, 0, 5, 1)
    z = HalfPlanePoint(0.0, 1.0)
    a = coset_sum_eval(5, INF, z, 2.0)
    b = coset_sum_eval(5, INF, mobius_act(g, z), 2.0)
    assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound


def test_oracle_needs_convergent_region():
    with pytest.raises(DomainError):
        coset_sum_eval(1, INF, HalfPlanePoint(0, 1), 1.2)


def test_zero_cusp_expansion_matches_oracle_at_example_point():
    z = HalfPlanePoint(0.1, 1.2)
    o = coset_sum_eval(5, ZERO, z, 2.0)
    assert abs(eval_eisenstein(5, ZERO, z, 2.0) - o.value) <= o.tail_bound + 1e-8


# ------------------------------------------------------- coefficients


def test_level_one_coefficient_ratio_by_fourier_inversion():
    # sample the oracle on a row of points and invert the cosine series
    y, big_m = 0.5, 10
    xs = np.arange(big_m) / big_m
    vals = np.array([coset_sum_eval(1, INF, HalfPlanePoint(float(x), y), 2.0).value.real for x in xs])
    b = [2.0 / big_m * float(np.sum(vals * np.cos(2 * np.pi * n * xs))) for n in (1, 2)]
    a = [b[n - 1] / (4 * math.sqrt(n * y) * bessel_k(1.5, 2 * math.pi * n * y).real) for n in (1, 2)]
    expected = (1.0 * divisor_sigma(-3, 1).real) / (2.0 * divisor_sigma(-3, 2).real)  # n^(s-1) sigma_(1-2s)(n)
    assert math.isclose(a[0] / a[1], expected, rel_tol=1e-4)
    coef = EisensteinSeries(1, INF, 2.0).coefficients(2)
    assert abs(coef[1] / coef[2] - expected) < 1e-13


@given(st.floats(-2, 3), st.floats(-20, 20), st.integers(1, 60))
def test_mode_parity(sr, si, n):
    s = complex(sr, si)
    if abs(s - 1) < 0.05 or abs(s) < 0.05:
        return
    try:
        exp = cusp_expansion(11, INF, s, 60)
    except ConditioningError:
        return
    assert exp.mode(n) == exp.mode(-n)
    assert exp.modes[n] == exp.modes[-n]


def test_expansion_fields():
    exp = cusp_expansion(5, ZERO, 0.5 + 2j, 8)
    assert exp.truncation == 8 and exp.level == 5 and exp.cusp is ZERO
    assert exp.c_plus == 0 and abs(exp.c_minus) > 0
    assert len(exp.modes) == 16


# -------------------------------------------------------- evaluation


@pytest.mark.parametrize("t", [0.5, 3.0, 12.0])
def test_large_height_constant_term_dominates(t):
    s = complex(0.5, t)
    ser = EisensteinSeries(1, INF, s)
    z = HalfPlanePoint(0.23, 10.0)
    const = ser.c_plus * 10.0**s + ser.c_minus * 10.0 ** (1 - s)
    assert abs(eval_eisenstein(1, INF, z, s) - const) < 1e-8


@pytest.mark.parametrize("q", [5, 11])
@pytest.mark.parametrize("t", [1.0, 5.0])
def test_invariance_both_routes(q, t):
    rng = np.random.default_rng(q * 100 + int(t))
    s = complex(0.5, t)
    for kappa in (INF, ZERO):
        for _ in range(10):
            g = random_gamma0(rng, q)
            z = HalfPlanePoint(rng.uniform(-0.5, 0.5), rng.uniform(0.2, 1.5))
            a = eval_abs2(q, kappa, z, t, route="direct")
            b = eval_abs2(q, kappa, mobius_act(g, z), t, route="reduce")
            assert abs(a - b) <= 1e-7 * a
            # the value itself, not only |E|^2, is invariant
            va = eval_eisenstein(q, kappa, z, s, route="direct")
            vb = eval_eisenstein(q, kappa, mobius_act(g, z), s, route="reduce")
            assert abs(va - vb) <= 1e-7 * abs(va)


def test_reduce_route_switches_cusps():
    # S is not in Gamma_0(11): E_inf(S z) must equal E_0 at the rescaled point
    q, s = 11, 0.5 + 2j
    z = HalfPlanePoint(0.1, 1.3)
    sz = mobius_act(GroupElement(0, -1, 1, 0), z)
    direct = eval_eisenstein(q, INF, sz, s, route="direct")
    reduced = eval_eisenstein(q, INF, sz, s, route="reduce")
    assert abs(direct - reduced) < 1e-9 * abs(direct)
    with pytest.raises(DomainError):
        eval_eisenstein(q, INF, z, s, route="sideways")


def test_abs2_nonnegative_and_symmetric_in_t():
    for z in random_points_in_f(5, 6):
        for t in (0.7, 4.0, 9.5):
            a = eval_abs2(11, ZERO, z, t)
            assert a >= 0
            assert math.isclose(a, eval_abs2(11, ZERO, z, -t), rel_tol=1e-12)
            v = eval_eisenstein(11, ZERO, z, complex(0.5, t))
            w = eval_eisenstein(11, ZERO, z, complex(0.5, -t))
            assert abs(v - w.conjugate()) < 1e-12 * max(1, abs(v))


def test_value_at_centre_vanishes_at_t_zero():
    # s = 1/2 is the limit where c_minus = -c_plus and every mode vanishes
    assert eval_abs2(1, INF, HalfPlanePoint(0.0, 1.0), 0.0) == 0.0
    small = eval_abs2(1, INF, HalfPlanePoint(0.0, 1.0), 1e-6)
    assert small < 1e-10


def test_refinement_is_stable():
    z = HalfPlanePoint(0.0, 1.0)
    for t in (0.0, 3.0):
        a = eval_abs2(1, INF, z, t, tol=1e-8)
        b = eval_abs2(1, INF, z, t, tol=1e-10)
        assert abs(a - b) <= 1e-7 * max(b, 1e-300)


def test_truncation_tracks_tolerance():
    ser = EisensteinSeries(11, INF, 0.5 + 5j)
    n8, n12 = ser.modes_needed(0.9, 1e-8), ser.modes_needed(0.9, 1e-12)
    assert 0 < n8 <= n12
    # the discarded modes really are below tol
    prof = ser.profile(0.9, 1e-12)
    assert float(np.sum(np.abs(prof[n8 + 1:]))) < 1e-8


def test_grid_matches_pointwise_and_threads_are_deterministic():
    ser = EisensteinSeries(5, INF, 0.5 + 3j)
    xs = np.linspace(-0.5, 0.5, 9)
    ys = [0.9, 1.4]
    grid = ser.values_grid(xs, ys)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            assert abs(grid[j, i] - ser.value_direct(HalfPlanePoint(x, y))) < 1e-13
    pts = random_points_in_f(9, 40)
    seq = [eval_eisenstein(5, ZERO, z, 0.5 + 7j) for z in pts]
    with ThreadPoolExecutor(max_workers=8) as pool:
        par = list(pool.map(lambda z: eval_eisenstein(5, ZERO, z, 0.5 + 7j), pts))
    assert seq == par


# -------------------------------------------------------- scattering


@pytest.mark.parametrize("q", [1, 2, 5, 11, 101])
@pytest.mark.parametrize("t", [1.0, 5.0, 10.0])
def test_scattering_unitary_and_symmetric(q, t):
    phi = scattering_matrix(q, complex(0.5, t))
    assert np.linalg.norm(phi @ phi.conj().T - np.eye(len(phi))) <= 1e-6
    assert np.allclose(phi, phi.T, atol=1e-14)


def test_scattering_at_half_is_minus_identity():
    assert np.allclose(scattering_matrix(11, 0.5), -np.eye(2))


def test_level_one_constant_term():
    # phi(s) = xi(2s - 1) / xi(2s)
    from levelque.specfun import completed_zeta

    s = 0.5 + 4j
    _, cm = constant_term(1, INF, s)
    assert abs(cm - completed_zeta(2 * s - 1) / completed_zeta(2 * s)) < 1e-14


# ------------------------------------------------------------- errors


def test_pole_and_conditioning_errors():
    with pytest.raises(PoleError):
        EisensteinSeries(1, INF, 1.0)
    with pytest.raises(PoleError):
        EisensteinSeries(5, INF, 0.0)
    # zeta(2s) vanishes at 2s = 1/2 + 14.1347...i
    with pytest.raises(ConditioningError):
        EisensteinSeries(1, INF, 0.25 + 7.0673626j)
    with pytest.raises(DomainError):
        EisensteinSeries(1, ZERO, 2.0)
    with pytest.raises(DomainError, match="level must be 1 or prime"):
        eisenstein_series(4, INF, 2.0)
    with pytest.raises(DomainError):
        EisensteinSeries(5, INF, 2.0).profile(1.0, 1e-14)
