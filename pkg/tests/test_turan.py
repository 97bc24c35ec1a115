import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caplight import geometry as geo
from caplight import harmonics as ha
from caplight import quadrature as quad
from caplight import turan


def brute_force_sup(r, intervals, n=1_000_000):
    total = sum(b - a for a, b in intervals)
    best = 0.0
    for a, b in intervals:
        k = max(2, int(n * (b - a) / total))
        best = max(best, float(np.max(np.abs(r(np.linspace(a, b, k))))))
    return best


def test_exponential_sum_dedup():
    r = turan.ExponentialSum(np.array([1.0, 2.0, 1.0]), np.array([3.0, 3.0 + 1e-15, 0.0]))
    assert r.n_terms == 2
    assert r.betas[np.argmax(r.lambdas)] == pytest.approx(3.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0, 1), st.floats(0, 1)).map(lambda t: (min(t), max(t))),
        min_size=1,
        max_size=6,
    )
)
def test_interval_set_normalization(raw):
    ivs = turan.IntervalSet(raw)
    for (a1, b1), (a2, b2) in zip(ivs.intervals, ivs.intervals[1:]):
        assert b1 < a2  # disjoint and sorted after merging
    assert 0.0 <= ivs.total_measure <= 1.0


def test_interval_set_rejects_outside():
    with pytest.raises(ValueError):
        turan.IntervalSet([(-0.1, 0.5)])


def test_sup_norm_single_term():
    r = turan.ExponentialSum(np.array([3.0 - 4.0j]), np.array([17.3]))
    assert turan.sup_norm(r) == pytest.approx(5.0, rel=1e-12)


def test_sup_norm_cosine():
    r = turan.ExponentialSum(np.array([1.0, 1.0]), np.array([2 * math.pi, -2 * math.pi]))
    assert turan.sup_norm(r) == pytest.approx(2.0, rel=1e-10)


def test_sup_norm_matches_brute_force():
    rng = np.random.default_rng(15)
    r = turan.random_exponential_sum(rng, 6)
    A = turan.IntervalSet([(0.0, 0.3)])
    ours = turan.sup_norm(r, A)
    brute = brute_force_sup(r, A.intervals)
    assert ours == pytest.approx(brute, abs=1e-9 * max(1, brute))


def test_sup_norm_monotone_in_set():
    rng = np.random.default_rng(25)
    r = turan.random_exponential_sum(rng, 5)
    small = turan.IntervalSet([(0.2, 0.4)])
    large = turan.IntervalSet([(0.1, 0.5), (0.6, 0.7)])
    assert turan.sup_norm(r, small) <= turan.sup_norm(r, large) + 1e-12


def test_sup_norm_validation():
    r = turan.ExponentialSum(np.array([1.0 + 0j]), np.array([0.0]))
    with pytest.raises(ValueError):
        turan.sup_norm(r, n_samples=10)


def test_check_nazarov_single_term_equality():
    r = turan.ExponentialSum(np.array([2.0 + 1.0j]), np.array([7.7]))
    rep = turan.check_nazarov(r, turan.IntervalSet([(0.3, 0.35)]))
    assert rep.holds
    assert rep.lhs == pytest.approx(rep.rhs_bound, rel=1e-9)


def test_check_nazarov_cosine_example():
    r = turan.ExponentialSum(np.array([1.0, 1.0]), np.array([2 * math.pi, -2 * math.pi]))
    rep = turan.check_nazarov(r, turan.IntervalSet([(0.0, 0.25)]))
    assert rep.lhs == pytest.approx(2.0, rel=1e-10)
    assert rep.rhs_bound == pytest.approx((316 / 0.25) * 2.0, rel=1e-9)
    assert rep.holds


def test_check_nazarov_fuzz_small():
    reports = turan.run_nazarov_trials(120, seed=99)
    assert all(r.holds for r in reports)
    assert any(r.n_terms == 1 for r in reports)


def test_check_nazarov_rejects_null_set():
    r = turan.ExponentialSum(np.array([1.0 + 0j]), np.array([0.0]))
    with pytest.raises(ValueError):
        turan.check_nazarov(r, turan.IntervalSet([(0.5, 0.5)]))


# ---------------------------------------------------------------------------
# cap-local inequality


def test_local_lemma_region_covering_cap(ctx3, north3, rule3_48):
    f = ha.random_poly(3, 31, ctx3)
    cap = geo.Cap(north3, 0.35)
    rep = turan.verify_local_lemma(f, cap, geo.FullSphere(), 2.0, rule3_48)
    assert rep.holds
    assert rep.peak_beats_mean
    assert rep.arc_ratio == pytest.approx(1.0)
    # with ratio 1 the bound reduces to mean <= max times the Turan factor
    assert rep.lhs <= rep.cap_mass ** 0.5 * rep.sup_region_cap * (1 + 1e-12)


def test_local_lemma_constant_function(ctx3, north3, rule3_48):
    f = ha.SphericalPolynomial(ctx3, 0, np.array([1.0]))
    cap = geo.Cap(north3, 0.35)
    rep = turan.verify_local_lemma(f, cap, geo.FullSphere(), 2.0, rule3_48)
    assert rep.holds
    assert rep.n_terms == 1
    # degree 0: the amplification factor is exactly 1
    assert rep.rhs == pytest.approx(rep.cap_mass**0.5 * rep.sup_region_cap, rel=1e-12)


def test_local_lemma_corpus(ctx3):
    rule = quad.sphere_rule(ctx3, 24)
    reports = turan.run_local_lemma_trials(20, seed=5, ctx=ctx3, rule=rule)
    assert all(r.holds for r in reports)
    assert all(r.peak_beats_mean for r in reports)


def test_local_lemma_requires_overlap(ctx3, north3, rule3_48):
    f = ha.random_poly(2, 1, ctx3)
    cap = geo.Cap(north3, 0.2)
    with pytest.raises(ValueError):
        turan.verify_local_lemma(f, cap, geo.Cap(-north3, 0.1), 2.0, rule3_48)


# ---------------------------------------------------------------------------
# capwise ratio


def test_capwise_region_covers_cap(ctx3, north3, rule3_48):
    f = ha.random_poly(4, 41, ctx3)
    cap = geo.Cap(north3, 0.3)
    rep = turan.capwise_constant(f, cap, geo.FullSphere(), 2.0, rule3_48)
    assert rep.rho == pytest.approx(1.0, rel=1e-12)
    assert rep.gamma_cap == pytest.approx(1.0)


def test_capwise_constant_function_half_mass(ctx3, north3, rule3_48):
    f = ha.SphericalPolynomial(ctx3, 0, np.array([1.0]))
    cap = geo.Cap(north3, 0.5)  # upper half-sphere, mass split evenly at z = 1/2
    region = geo.Band(math.asin(0.5), math.pi / 2)
    rep = turan.capwise_constant(f, cap, region, 2.0, rule3_48)
    assert rep.rho == pytest.approx(rep.gamma_cap**0.5, rel=1e-12)
    assert rep.rho == pytest.approx(1 / math.sqrt(2), abs=5e-2)
    assert rep.half_mass_ok  # constant function never falls below the threshold


def test_capwise_matches_direct_quadrature(ctx3, north3, rule3_48):
    f = ha.random_poly(4, 51, ctx3)
    cap = geo.Cap(north3, 0.45)
    region = geo.Complement(geo.Cap(np.array([1.0, 0.0, 0.0]), 0.3))
    rep = turan.capwise_constant(f, cap, region, 2.0, rule3_48)
    num = ha.lq_norm(f, geo.Intersection([cap, region]), rule3_48, 2.0)
    den = ha.lq_norm(f, cap, rule3_48, 2.0)
    assert rep.rho == pytest.approx(num / den, rel=1e-12)
    # implied constant inverts the defining relation
    expo = 2 * f.degree_N + 0.5
    assert rep.rho == pytest.approx((rep.gamma_cap / (2 * rep.c_implied)) ** expo, rel=1e-9)


def test_capwise_rho_monotone_in_region(ctx3, north3, rule3_48):
    f = ha.random_poly(3, 61, ctx3)
    cap = geo.Cap(north3, 0.4)
    small = geo.Band(0.3, math.pi / 2)
    large = geo.Band(0.1, math.pi / 2)
    rho_small = turan.capwise_constant(f, cap, small, 2.0, rule3_48).rho
    rho_large = turan.capwise_constant(f, cap, large, 2.0, rule3_48).rho
    assert rho_small <= rho_large + 1e-12


def test_capwise_rejects_vanishing_norm(ctx3, north3, rule3_48):
    f = ha.SphericalPolynomial(ctx3, 0, np.array([0.0]))
    cap = geo.Cap(north3, 0.3)
    with pytest.raises(ValueError):
        turan.capwise_constant(f, cap, geo.FullSphere(), 2.0, rule3_48)
