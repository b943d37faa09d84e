import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci_integrate
from scipy import stats

from sarmanov_ruin import (
    BoundedPareto,
    DomainError,
    Lognormal,
    LognormalTail,
    ModelError,
    ParetoTail,
    PointMass,
    RegularlyVaryingLaw,
    ScaledBeta,
    SlowlyVaryingSpec,
    Uniform,
    WeibullTail,
    power_moment,
    quantile,
    sample_iid,
    tail,
    truncated_alpha_moment,
)

PARETO = RegularlyVaryingLaw(2.0, 1.0)
TYPE3 = RegularlyVaryingLaw(1.0, 1.0, SlowlyVaryingSpec("III", 1.0, WeibullTail(0.5)))
TYPE2 = RegularlyVaryingLaw(1.5, 1.0, SlowlyVaryingSpec("II", 1.0, v_law=ParetoTail(1.0, 1.0)))
TYPE4 = RegularlyVaryingLaw(
    1.0, 1.0, SlowlyVaryingSpec("IV", 2.0, WeibullTail(0.5), ParetoTail(1.0, 1.0))
)
ALL_F = [PARETO, TYPE2, TYPE3, TYPE4]
ALL_G = [Uniform(1.0), Uniform(2.0), ScaledBeta(2.0, 3.0, 1.5), BoundedPareto(1.5, 0.2, 1.2), Lognormal(-0.3, 0.6)]


# ---- tails ---------------------------------------------------------------


def test_pareto_tail_values():
    assert tail(PARETO, 10.0) == pytest.approx(0.01, rel=1e-15)
    assert tail(PARETO, 0.5) == 1.0


def test_type3_tail_against_numeric_density():
    # oracle: 1 - ∫ density, with the density differentiated by hand in t = log x
    x = math.e**4
    direct = math.exp(-4.0) * math.exp(-math.sqrt(4.0))
    assert tail(TYPE3, x) == pytest.approx(direct, rel=1e-13)
    dens = lambda t: math.exp(-t - math.sqrt(t)) * (1.0 + 0.5 / math.sqrt(t))
    mass, _ = sci_integrate.quad(dens, 0.0, 4.0, limit=400)
    assert 1.0 - mass == pytest.approx(direct, rel=1e-9)


def test_tail_equals_one_at_left_endpoint_for_every_form():
    for F in ALL_F:
        assert float(F.tail(F.x_m)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("F", ALL_F)
def test_tail_is_nonincreasing(F):
    x = np.geomspace(F.x_m, 1e12, 2000)
    assert np.all(np.diff(F.tail(x)) <= 0)


@pytest.mark.parametrize("y", [2.0, 5.0, 10.0])
@pytest.mark.parametrize("x", [1e3, 1e4, 1e5])
def test_type1_regular_variation(x, y):
    target = y**-PARETO.alpha
    assert abs(PARETO.tail(x * y) / PARETO.tail(x) - target) <= 0.05 * target


@pytest.mark.parametrize(
    "F, xs",
    [
        (TYPE3, [1e3, 1e4, 1e5, 1e6]),
        # the TypeIV log-correction -log(5)/(2 sqrt(s)) + log(5)/s only turns monotone past s = 16
        (TYPE4, [1e8, 1e10, 1e12, 1e14]),
    ],
)
def test_slowly_varying_correction_shrinks(F, xs):
    y = 5.0
    xs = np.array(xs)
    err = np.abs(F.tail(xs * y) / F.tail(xs) - y**-F.alpha)
    assert np.all(np.diff(err) < 0)


def test_type4_correction_is_not_yet_monotone_below_turning_point():
    xs = np.array([1e3, 1e4, 1e5, 1e6])
    err = np.abs(TYPE4.tail(xs * 5.0) / TYPE4.tail(xs) - 0.2)
    assert np.all(np.diff(err) > 0)


def test_pdf_integrates_to_tail():
    for F in ALL_F:
        got = F.expect(lambda v: 1.0, lower=20.0)
        assert got == pytest.approx(float(F.tail(20.0)), rel=1e-8)


def test_increasing_tail_is_rejected():
    # 1/P[V > log x] grows with hazard 0.5/sqrt(log x), faster than x^0.2 decays until log x = 6.25
    spec = SlowlyVaryingSpec("II", 1.0, v_law=WeibullTail(0.5))
    with pytest.raises(ModelError, match="raise x_m"):
        RegularlyVaryingLaw(0.2, 1.0, spec)
    F = RegularlyVaryingLaw(0.2, math.exp(6.3), spec)
    assert np.all(np.diff(F.tail(np.geomspace(F.x_m, 1e9, 500))) <= 0)
    with pytest.raises(ModelError, match="not admissible"):
        RegularlyVaryingLaw(0.2, 1.0, SlowlyVaryingSpec("II", 1.0, v_law=WeibullTail(0.9, 5.0)))


def test_form_requires_matching_laws():
    with pytest.raises(ModelError):
        SlowlyVaryingSpec("III")
    with pytest.raises(ModelError):
        SlowlyVaryingSpec("I", u_law=WeibullTail(0.5))
    with pytest.raises(ModelError):
        WeibullTail(1.0)
    with pytest.raises(ModelError):
        SlowlyVaryingSpec("I", c=0.0)


def test_c_cancels_after_normalization():
    a = RegularlyVaryingLaw(1.0, 1.0, SlowlyVaryingSpec("III", 1.0, WeibullTail(0.5)))
    b = RegularlyVaryingLaw(1.0, 1.0, SlowlyVaryingSpec("III", 7.0, WeibullTail(0.5)))
    x = np.geomspace(1, 1e8, 50)
    np.testing.assert_allclose(a.tail(x), b.tail(x), rtol=1e-14)


def test_discount_tails():
    assert tail(Uniform(2.0), 0.5) == pytest.approx(0.75)
    assert tail(PointMass(0.7), 0.7) == 0.0
    assert tail(PointMass(0.7), 0.69) == 1.0
    ln = Lognormal(0.0, 1.0)
    assert tail(ln, math.e) == pytest.approx(stats.norm.sf(1.0), rel=1e-12)


# ---- quantiles -----------------------------------------------------------


def test_quantile_examples():
    assert quantile(PARETO, 0.99) == pytest.approx(10.0, rel=1e-14)
    assert quantile(Uniform(1.0), 0.5) == 0.5


@pytest.mark.parametrize("law", ALL_F + ALL_G)
def test_quantile_round_trip(law):
    u = np.random.default_rng(3).uniform(0.001, 0.999, 1000)
    q = quantile(law, u)
    np.testing.assert_allclose(law.cdf(q), u, atol=1e-10)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(u):
    with pytest.raises(DomainError):
        quantile(PARETO, u)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-4, 1 - 1e-9))
def test_bisection_quantile_matches_cdf(u):
    # below u ~ 1e-4 the CDF climbs like sqrt(log x) so fast that the spacing of
    # doubles near x_m = 1 alone exceeds a 1e-10 error in u
    assert float(TYPE4.cdf(quantile(TYPE4, u))) == pytest.approx(u, abs=1e-10)


# ---- sampling ------------------------------------------------------------


def test_sample_determinism_and_empty():
    assert sample_iid(PARETO, 0, 1).shape == (0,)
    np.testing.assert_array_equal(sample_iid(TYPE3, 100, 5), sample_iid(TYPE3, 100, 5))


def test_uniform_sample_ks():
    s = sample_iid(Uniform(1.0), 100_000, 7)
    assert stats.kstest(s, "uniform").pvalue > 0.01


@pytest.mark.parametrize("G", ALL_G)
def test_sampled_power_moment(G):
    alpha = 2.0
    y = sample_iid(G, 1_000_000, 11) ** alpha
    se = y.std(ddof=1) / math.sqrt(y.size)
    assert abs(y.mean() - power_moment(G, alpha)) <= 4 * se


# ---- truncated alpha moment ----------------------------------------------


def test_truncated_moment_examples():
    assert truncated_alpha_moment(PARETO, 1.0) == 0.0
    assert truncated_alpha_moment(PARETO, math.e) == pytest.approx(2.0, rel=1e-14)
    assert truncated_alpha_moment(PARETO, math.e**2) == pytest.approx(4.0, rel=1e-14)
    assert truncated_alpha_moment(PARETO, 1e6) / truncated_alpha_moment(PARETO, 1e3) == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("F", ALL_F)
def test_truncated_moment_against_quadrature(F):
    # oracle: direct ∫ v^alpha f(v) dv in x-space with scipy
    x = 500.0
    pdf = lambda v: float(F.pdf(v))
    oracle, _ = sci_integrate.quad(lambda v: v**F.alpha * pdf(v), F.x_m, x, limit=500, points=[2, 10, 50])
    assert truncated_alpha_moment(F, x) == pytest.approx(oracle, rel=1e-7)


@pytest.mark.parametrize("F", ALL_F)
def test_truncated_moment_nondecreasing(F):
    m = truncated_alpha_moment(F, np.geomspace(1, 1e6, 100))
    assert np.all(np.diff(m) >= 0)


def test_truncated_moment_domain():
    with pytest.raises(DomainError):
        truncated_alpha_moment(PARETO, 0.5)


# ---- power moments -------------------------------------------------------


def test_power_moment_examples():
    assert power_moment(Uniform(1.0), 0.0) == 1.0
    assert power_moment(Uniform(1.0), 2.0) == pytest.approx(1 / 3, rel=1e-15)
    assert power_moment(Uniform(2.0), 1.0) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        power_moment(Uniform(1.0), -1.0)


@pytest.mark.parametrize("G", ALL_G + [PointMass(0.8)])
@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.7])
def test_power_moment_closed_form_against_quadrature(G, p):
    oracle = G.expect(lambda y: y**p)
    assert power_moment(G, p) == pytest.approx(oracle, rel=1e-9)
