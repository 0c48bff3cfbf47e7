import cmath
import math
from math import gcd

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from levelque.arith import divisors, primes_up_to
from levelque.errors import CapabilityError, DomainError, PoleError
from levelque.heckeseries import (
    FormalEulerFactor,
    HeckeSequence,
    OldformCoefficients,
    decay_scan,
    hecke_local_factor,
    l_function,
    lambda_at,
    lambda_range,
    lemma24_euler_factor_check,
    lemma24_lhs_truncated,
    lemma24_rhs_closed,
    lhs_local_factor,
    make_hecke_sequence,
    oldform_contribution,
    oldform_contribution_215,
    prime_power_values,
    rhs_local_factor,
)
from levelque.specfun import zeta

SMALL_PRIMES = [int(p) for p in primes_up_to(50)]
NUS = [0.0, -0.4, -1.4j]


@pytest.fixture(scope="module")
def seq():
    return make_hecke_sequence(7, 20_000)


def constant_sequence(value, bound, tau1=1.0):
    primes = np.array(primes_up_to(bound), dtype=np.int64)
    return HeckeSequence(primes, np.full(len(primes), float(value)), 0.0, complex(tau1))


# ---------------------------------------------------------- sequences


def test_sequence_examples(seq):
    assert lambda_at(seq, 1) == 1.0
    for p in (2, 3, 101):
        lp = seq.at_prime(p)
        assert abs(lambda_at(seq, p * p) - (lp * lp - 1)) < 1e-15
        assert abs(lambda_at(seq, p**3) - (lp**3 - 2 * lp)) < 1e-14
    assert lambda_at(seq, 12) == lambda_at(seq, 4) * lambda_at(seq, 3)


def test_sequence_is_deterministic_and_bounded():
    a, b = make_hecke_sequence(3, 5000), make_hecke_sequence(3, 5000)
    assert np.array_equal(a.values, b.values) and a.tau1 == b.tau1
    assert not np.array_equal(a.values, make_hecke_sequence(4, 5000).values)
    assert np.all(np.abs(a.values) <= 2.0)
    t = make_hecke_sequence(3, 5000, theta=0.1)
    p = t.primes.astype(float)
    assert np.all(np.abs(t.values) <= p**0.1 + p**-0.1 + 1e-12)
    assert np.any(np.abs(t.values) > 2.0)


def test_sato_tate_moments():
    vals = make_hecke_sequence(11, 200_000).values
    # E[lambda] = 0, E[lambda^2] = 1, E[lambda^4] = 2 under Sato-Tate
    se = 1 / math.sqrt(len(vals))
    assert abs(vals.mean()) < 5 * se
    assert abs((vals**2).mean() - 1) < 5 * se
    assert abs((vals**4).mean() - 2) < 15 * se


def test_sequence_validation():
    primes = np.array([2, 3, 5])
    with pytest.raises(DomainError):
        HeckeSequence(primes, np.array([0.0, 2.5, 0.0]))
    with pytest.raises(DomainError):
        HeckeSequence(primes, np.zeros(3), theta=0.2)
    with pytest.raises(DomainError):
        make_hecke_sequence(0, 1)


def test_capability_errors(seq):
    with pytest.raises(CapabilityError):
        lambda_at(make_hecke_sequence(0, 100), 103)
    with pytest.raises(CapabilityError):
        lambda_range(make_hecke_sequence(0, 100), 200)
    with pytest.raises(DomainError):
        lambda_at(seq, 0)


@given(st.integers(1, 140), st.integers(1, 140))
def test_multiplicativity(m, n):
    s = make_hecke_sequence(7, 20_000)
    assume(gcd(m, n) == 1)
    assert lambda_at(s, m * n) == lambda_at(s, m) * lambda_at(s, n) or abs(
        lambda_at(s, m * n) - lambda_at(s, m) * lambda_at(s, n)) <= 1e-15 * abs(lambda_at(s, m * n))


@given(st.integers(1, 140), st.integers(1, 140))
def test_hecke_composition(m, n):
    s = make_hecke_sequence(7, 20_000)
    g = gcd(m, n)
    rhs = math.fsum(lambda_at(s, m * n // (d * d)) for d in divisors(g))
    assert abs(lambda_at(s, m) * lambda_at(s, n) - rhs) <= 1e-10


def test_lambda_range_matches_pointwise(seq):
    lam = lambda_range(seq, 3000)
    for n in range(1, 3001, 7):
        assert abs(lam[n] - lambda_at(seq, n)) <= 1e-13 * max(1, abs(lam[n]))


def test_oldform_coefficients(seq):
    old = OldformCoefficients(seq, 11)
    assert old.rho(5) == 0 and old.rho(12) == 0
    assert abs(old.rho(33) - math.sqrt(11) * seq.tau1 * lambda_at(seq, 3)) < 1e-15
    assert old.tau_tilde("normalized") == seq.at_prime(11)
    assert old.tau_tilde("raw") == seq.tau1 * seq.at_prime(11)
    with pytest.raises(DomainError):
        OldformCoefficients(seq, 12)


# ------------------------------------------------------ formal series


coef_lists = st.lists(
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=6, max_size=6
)


@given(coef_lists, coef_lists, coef_lists)
def test_formal_series_ring_laws(a, b, c):
    fa, fb, fc = (FormalEulerFactor.from_list(5, x, 5) for x in (a, b, c))
    assert ((fa * fb) * fc).max_deviation(fa * (fb * fc)) < 1e-10
    assert (fa * fb).max_deviation(fb * fa) < 1e-12
    assert (fa * (fb + fc)).max_deviation(fa * fb + fa * fc) < 1e-11


@given(coef_lists)
def test_formal_series_inverse(a):
    assume(abs(a[0]) > 0.1)
    f = FormalEulerFactor.from_list(3, a, 5)
    one = FormalEulerFactor.from_list(3, [1.0], 5)
    scale = max(1.0, max(abs(c) for c in f.inverse().coefficients))
    assert (f * f.inverse()).max_deviation(one) < 1e-10 * scale * 3


def test_formal_series_errors():
    f = FormalEulerFactor.from_list(3, [0.0, 1.0], 4)
    with pytest.raises(PoleError):
        f.inverse()
    with pytest.raises(DomainError):
        f + FormalEulerFactor.from_list(5, [1.0], 4)


@pytest.mark.parametrize("lam", [0.0, 1.3, -1.9, 2.0])
def test_hecke_local_factor_gives_prime_powers(lam):
    f = hecke_local_factor(7, lam, 0, 10)
    assert max(abs(a - b) for a, b in zip(f.coefficients, prime_power_values(lam, 10))) < 1e-12


# --------------------------------------------------- lemma, exact form


def test_display_one_all_primes(seq):
    small = make_hecke_sequence(7, 101)
    for q in (11, 13, 47):
        old = OldformCoefficients(small, q)
        for p in SMALL_PRIMES:
            for nu in NUS:
                res = lemma24_euler_factor_check(old, p, 10, nu, displays=(1,))
                assert res.max_deviation < 1e-12


def test_display_one_constant_terms(seq):
    old = OldformCoefficients(make_hecke_sequence(1, 101), 11)
    for nu in NUS:
        lhs = lhs_local_factor(old, 11, nu, 0)
        rhs = rhs_local_factor(old, 11, nu, 0)
        assert abs(lhs.coefficients[0] - (1 + 11**nu)) < 1e-15
        assert abs(lhs.coefficients[0] - rhs.coefficients[0]) < 1e-15


def test_display_two_derived_forms_hold():
    old = OldformCoefficients(make_hecke_sequence(2, 101), 13)
    for alpha in ("valuation", "valuation_minus_one"):
        for p in SMALL_PRIMES:
            for nu in NUS:
                res = lemma24_euler_factor_check(old, p, 10, nu, displays=(2,), form="derived", alpha=alpha)
                assert res.max_deviation < 1e-12


def test_display_two_as_printed_misses_terms():
    # characterises the discrepancy of the printed second bracket at p = q
    old = OldformCoefficients(make_hecke_sequence(2, 101), 13)
    q, order = 13, 10
    for nu in NUS:
        qn = complex(q) ** nu
        lhs = lhs_local_factor(old, q, nu, order, display=2, alpha="valuation")
        rhs = rhs_local_factor(old, q, nu, order, display=2, alpha="valuation")
        # alpha = v_q(n) removes every q from sigma, so the constant term is 1, not 1 + q^nu
        assert abs(lhs.coefficients[0] - 1.0) < 1e-15
        assert abs(rhs.coefficients[0] - (1.0 + qn)) < 1e-15
        # alpha = v_q(n) - 1: only the q^(2 nu) X^2 numerator term is missing
        lhs = lhs_local_factor(old, q, nu, order, display=2, alpha="valuation_minus_one")
        rhs = rhs_local_factor(old, q, nu, order, display=2, alpha="valuation_minus_one")
        missing = FormalEulerFactor.from_list(q, [0, 0, (1 + qn) * qn * qn], order)
        den = FormalEulerFactor.from_list(q, [1, 0, -qn], order).inverse()
        base = rhs_local_factor(old, q, nu, order, display=1)
        base = base / FormalEulerFactor.from_list(q, [1 + qn, -old.tau_tilde() * qn], order) * FormalEulerFactor.from_list(q, [1, 0, -qn], order)
        assert (lhs - rhs).max_deviation(missing * den * base) < 1e-12
        assert lhs.max_deviation(rhs) > 1e-3


def test_display_two_away_from_level_agrees():
    old = OldformCoefficients(make_hecke_sequence(2, 101), 13)
    for p in SMALL_PRIMES:
        if p == 13:
            continue
        assert lemma24_euler_factor_check(old, p, 10, -0.4, displays=(2,)).max_deviation < 1e-12


def test_tilde_convention_discriminates():
    s = make_hecke_sequence(5, 101, tau1=1.7 * cmath.exp(0.6j))
    old = OldformCoefficients(s, 11)
    good = lemma24_euler_factor_check(old, 11, 10, -0.4, displays=(1,), tilde="normalized")
    bad = lemma24_euler_factor_check(old, 11, 10, -0.4, displays=(1,), tilde="raw")
    assert good.passed and not bad.passed


# --------------------------------------------- truncated vs closed form


def test_truncated_first_term(seq):
    q, s, nu = 11, 3.0, -0.4
    old = OldformCoefficients(seq, q)
    got = lemma24_lhs_truncated(old, s, nu, q).value
    expected = math.sqrt(q) * seq.tau1 * (1 + q**nu) * q**-s
    assert abs(got - expected) < 1e-15


def test_truncated_degenerate_sequence_by_hand():
    q, s = 11, 3.0
    old = OldformCoefficients(constant_sequence(2.0, 50), q)
    got = lemma24_lhs_truncated(old, s, 0.0, 3 * q).value
    # rho(q) = sqrt(q), rho(2q) = rho(3q) = 2 sqrt(q); sigma_0 = 2, 4, 4
    expected = math.sqrt(q) * (2 * q**-s + 2 * 4 * (2 * q) ** -s + 2 * 4 * (3 * q) ** -s)
    assert abs(got - expected) < 1e-15


def test_closed_form_degenerate_bracket():
    q, s = 11, 3.0
    base = make_hecke_sequence(4, 50_000)
    old = OldformCoefficients(base.with_prime_values({q: 0.0}), q)
    got = lemma24_rhs_closed(old, s, 0.0).value
    lval = l_function(old.underlying, s).value
    expected = 2 / (1 - q ** (-2 * s)) * q ** (0.5 - s) * base.tau1 * lval * lval / zeta(2 * s)
    assert abs(got - expected) < 1e-14 * abs(expected)


@pytest.mark.parametrize("q", [11, 101])
@pytest.mark.parametrize("nu", NUS)
def test_truncated_matches_closed_within_tails(q, nu):
    seq = make_hecke_sequence(q, 200 * q)
    old = OldformCoefficients(seq, q)
    lhs = lemma24_lhs_truncated(old, 3.0, nu, 200 * q)
    rhs = lemma24_rhs_closed(old, 3.0, nu)
    assert abs(lhs.value - rhs.value) <= lhs.tail_bound + rhs.tail_bound


def test_truncated_matches_closed_random_cases():
    rng = np.random.default_rng(2024)
    for k in range(50):
        q = int(rng.choice([11, 13, 17, 19, 23]))
        seq = make_hecke_sequence(1000 + k, 60 * q, theta=float(rng.uniform(0, 0.1)))
        s = complex(rng.uniform(3.0, 4.0), rng.uniform(-5, 5))
        nu = complex(rng.uniform(-1.0, 0.3), rng.uniform(-3, 3))
        old = OldformCoefficients(seq, q)
        lhs = lemma24_lhs_truncated(old, s, nu, 60 * q)
        rhs = lemma24_rhs_closed(old, s, nu)
        assert abs(lhs.value - rhs.value) <= lhs.tail_bound + rhs.tail_bound


def test_truncated_domain_checks(seq):
    old = OldformCoefficients(seq, 11)
    with pytest.raises(DomainError):
        lemma24_lhs_truncated(old, 2.0, 0.0, 100)
    with pytest.raises(DomainError):
        lemma24_lhs_truncated(old, 3.0, 0.0, 5)
    with pytest.raises(DomainError):
        lemma24_lhs_truncated(old, 2.6, 1.5, 100)


def test_l_function_against_dirichlet_series(seq):
    s = 3.0 + 1.0j
    lam = lambda_range(seq, 19_000)
    n = np.arange(1, 19_001, dtype=float)
    direct = complex(np.sum(lam[1:] * np.exp(-s * np.log(n))))
    # tail of the series: |lambda(n)| <= d(n) <= 2 sqrt(n)
    tail = 2 * 19_000 ** (1.5 - 3.0) / 1.5
    lv = l_function(seq, s)
    assert abs(lv.value - direct) <= lv.tail_bound + tail


# --------------------------------------------------- oldform combination


def test_leading_term_vanishes_with_tau_q():
    s = make_hecke_sequence(3, 2000)
    old = OldformCoefficients(s.with_prime_values({101: 0.0}), 101)
    lead, _ = oldform_contribution_215(old, 0.5, 1.0, l_factor=1.0)
    assert lead == 0


def test_leading_term_scaling_is_exact():
    # leading / tau(q) = q^(1/2 - 2(s+it)) / (1 - q^-2s) times a q-free factor
    s = make_hecke_sequence(3, 20_000)
    vals = []
    for q in (11, 101, 1009):
        old = OldformCoefficients(s, q)
        lead = oldform_contribution(old, 0.5, 1.0, l_factor=1.0).leading
        vals.append(abs(lead) / abs(s.tau1 * s.at_prime(q)) * (1 - 1 / q))
    for q, v in zip((11, 101, 1009), vals):
        assert math.isclose(v, q**-0.5, rel_tol=1e-12)


def test_leading_ratios_within_factor_three_on_average():
    rows, _ = decay_scan([11, 101, 1009], list(range(64)))
    mags = dict(rows)
    for q1, q2 in ((11, 101), (101, 1009)):
        r = (mags[q2] / mags[q1]) / (q2 / q1) ** -0.5
        assert 1 / 3 <= r <= 3


def test_euler_product_route_matches_supplied_l_factor():
    from levelque.specfun import completed_zeta

    s = make_hecke_sequence(8, 50_000)
    old = OldformCoefficients(s, 101)
    a = oldform_contribution(old, 2.0, 1.0)
    lf = (l_function(s, 2 + 1j).value * l_function(s, 2 - 1j).value
          / (zeta(4.0) * completed_zeta(1 + 2j)))
    b = oldform_contribution(old, 2.0, 1.0, l_factor=lf)
    assert abs(a.leading - b.leading) < 1e-14 * abs(a.leading)
    with pytest.raises(CapabilityError):
        oldform_contribution(old, 0.5, 1.0)


def test_remainder_is_lower_order_only_with_one_q_kept():
    t = 1.0
    for q in (1009, 10007):
        for seed in range(16):
            seq = make_hecke_sequence(seed, q)
            old = OldformCoefficients(seq, q)
            pre = seq.tau1 * q ** (1j * t) / (1 - 1 / q)
            a = q ** (-2j * t)
            # at s = 1/2 the bracket minus the leading term is -2 pre (1 + q^-2it) q^(-1-2it) + O(q^-3/2)
            approx = -2 * pre * (1 + a) * q ** (-1 - 2j * t)
            minus_one = oldform_contribution(old, 0.5, t, l_factor=1.0, alpha="valuation_minus_one")
            rem = minus_one.bracket - minus_one.leading
            assert abs(rem - approx) <= 4 * abs(seq.tau1) * q**-1.5
            # with alpha = v_q(n) the remainder contains q^(-2it) X-free terms of size one
            plain = oldform_contribution(old, 0.5, t, l_factor=1.0, alpha="valuation")
            assert abs(plain.bracket - plain.leading) > 0.05 * abs(seq.tau1)


def test_printed_bracket_differs_from_derived():
    old = OldformCoefficients(make_hecke_sequence(1, 200), 101)
    c = oldform_contribution(old, 0.5, 1.0, l_factor=1.0)
    assert abs(c.printed - c.bracket) > 1e-3


def test_decay_exponent_and_theta_trend():
    levels = [11, 101, 1009, 10007]
    _, e0 = decay_scan(levels, list(range(64)), theta=0.0)
    _, e1 = decay_scan(levels, list(range(64)), theta=0.1)
    assert abs(e0 + 0.5) <= 0.1
    assert e1 > e0
    rows, e = decay_scan(levels, list(range(4)), force_tau_q_zero=True)
    assert all(v == 0 for _, v in rows) and math.isnan(e)
    with pytest.raises(DomainError):
        decay_scan([12], [0])
