import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci_integrate
from scipy import stats

from conftest import make_config_a
from kernels import pareto2_fgm_phi1, shifted_phi2, uniform_fgm_phi2, uniform_sine_phi2
from sarmanov_ruin import (
    AcceptanceRateError,
    CustomKernels,
    DomainError,
    ModelError,
    PointMass,
    RegularlyVaryingLaw,
    SarmanovModel,
    Uniform,
    conditional_tail_x_given_y,
    kernel_tail_integral,
    sample_joint,
    twisted_law,
    validate,
)

F2 = RegularlyVaryingLaw(2.0, 1.0)


def custom(phi1, phi2, theta=1.0, b1=1.0, b2=1.0, d1=-1.0, G=Uniform(1.0)):
    return SarmanovModel(F2, G, theta, CustomKernels(phi1, phi2, b1, b2, d1))


# ---- validation ----------------------------------------------------------


def test_fgm_theta_one_is_valid(config_a):
    rep = validate(config_a)
    assert rep.valid
    assert rep.positivity_margin == 0.0
    assert rep.d1 == -1.0
    assert abs(rep.centering_x) < 1e-10 and abs(rep.centering_y) < 1e-10


def test_fgm_theta_above_one_fails_positivity():
    rep = validate(make_config_a(1.2))
    assert not rep.valid
    assert any("1+θφ₁(x)φ₂(y) ≥ 0" in f for f in rep.failures())
    with pytest.raises(ModelError, match="1\\+θφ₁\\(x\\)φ₂\\(y\\) ≥ 0"):
        make_config_a(1.2).require_valid()


def test_uncentered_custom_kernel_fails():
    rep = validate(custom(pareto2_fgm_phi1, shifted_phi2, theta=0.5))
    assert not rep.valid
    assert rep.centering_y == pytest.approx(0.1, abs=1e-12)
    assert any("E[φ₂(Y)] = 0" in f for f in rep.failures())


def test_misdeclared_bound_is_caught():
    # sin(2 pi y) reaches 1 but b2 = 0.5 is declared
    rep = validate(custom(pareto2_fgm_phi1, uniform_sine_phi2, theta=0.5, b2=0.5))
    assert any("|φ₂| ≤ b₂" in f for f in rep.failures())


def test_negative_margin_can_still_be_valid():
    # declared bounds are loose; the grid search finds the true minimum 1 - 0.5 = 0.5
    m = custom(pareto2_fgm_phi1, uniform_fgm_phi2, theta=0.5, b1=2.0, b2=2.0, d1=-1.0)
    rep = validate(m)
    assert rep.positivity_margin == -1.0
    assert rep.valid


def test_misdeclared_d1_warns():
    with pytest.warns(UserWarning, match="declared d₁"):
        validate(custom(pareto2_fgm_phi1, uniform_fgm_phi2, theta=0.5, d1=0.5))


# ---- kernel tail integral ------------------------------------------------


def test_kernel_tail_integral_examples(config_a):
    assert kernel_tail_integral(config_a, 1.0) == 0.0
    assert kernel_tail_integral(config_a, 10.0) == pytest.approx(-0.0099, rel=1e-14)
    t = float(F2.isf(1e-12))
    assert abs(kernel_tail_integral(config_a, t)) <= 1e-12
    with pytest.raises(DomainError):
        kernel_tail_integral(config_a, 0.5)


def test_kernel_tail_integral_against_scipy(config_a):
    # oracle: ∫_t^∞ (2 v^-2 - 1) 2 v^-3 dv by scipy in x-space
    for t in [1.5, 10.0, 300.0]:
        oracle, _ = sci_integrate.quad(lambda v: (2 * v**-2 - 1) * 2 * v**-3, t, np.inf, epsabs=1e-15)
        assert kernel_tail_integral(config_a, t) == pytest.approx(oracle, rel=1e-9, abs=1e-16)


def test_custom_kernel_table_matches_fgm_closed_form(config_a):
    m = custom(pareto2_fgm_phi1, uniform_fgm_phi2)
    t = np.geomspace(1.0, 1e9, 300)
    np.testing.assert_allclose(kernel_tail_integral(m, t), kernel_tail_integral(config_a, t), rtol=1e-9, atol=1e-15)


# ---- conditional tails ---------------------------------------------------


def test_conditional_tail_examples(config_a, config_a0):
    assert conditional_tail_x_given_y(config_a, 0.25, 10.0) == pytest.approx(0.00505, rel=1e-13)
    assert conditional_tail_x_given_y(config_a, 0.5, 10.0) == pytest.approx(0.01, rel=1e-15)
    for y in [0.1, 0.7, 0.99]:
        assert conditional_tail_x_given_y(config_a0, y, 7.0) == pytest.approx(7.0**-2, rel=1e-15)


def test_conditional_tail_against_conditional_density(config_a):
    # oracle: ∫_t^∞ (1 + θ φ₁(x) φ₂(y)) f(x) dx with scipy
    y, t = 0.2, 4.0
    p2 = 1 - 2 * y
    oracle, _ = sci_integrate.quad(lambda x: (1 + (2 * x**-2 - 1) * p2) * 2 * x**-3, t, np.inf, epsabs=1e-15)
    assert conditional_tail_x_given_y(config_a, y, t) == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("t", [1.0, 3.0, 50.0])
def test_conditional_tail_integrates_back(config_a, t):
    got, _ = sci_integrate.quad(lambda y: conditional_tail_x_given_y(config_a, y, t), 0, 1, epsabs=1e-14)
    assert got == pytest.approx(float(F2.tail(t)), abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.floats(-1, 1), st.floats(1e-6, 1 - 1e-6), st.floats(1.0, 1e6))
def test_conditional_tail_is_a_probability_and_decreasing(theta, y, t):
    m = make_config_a(theta)
    a = conditional_tail_x_given_y(m, y, t)
    b = conditional_tail_x_given_y(m, y, 2 * t)
    assert 0.0 <= b <= a <= 1.0


# ---- twisted law ---------------------------------------------------------


def test_twisted_law_independent_case(config_a0):
    law = twisted_law(config_a0)
    np.testing.assert_array_equal(law.density_ratio(np.linspace(0, 1, 11)), 1.0)


def test_twisted_law_fgm_uniform(config_a):
    law = twisted_law(config_a)
    y = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(law.density_ratio(y), 2 * y, rtol=1e-14)
    assert law.power_moment(2.0) == pytest.approx(0.5, rel=1e-12)
    assert law.tail(0.3) == pytest.approx(1 - 0.09, rel=1e-10)


def test_twisted_law_rejects_negative_density():
    # a d1 of -2 is inconsistent with phi1 in [-1, 1] and drives 1 + θ d1 φ₂ below 0
    m = custom(pareto2_fgm_phi1, uniform_fgm_phi2, theta=1.0, b1=2.0, d1=-2.0)
    with pytest.warns(UserWarning):
        with pytest.raises(ModelError, match="negative"):
            twisted_law(m)


def test_point_mass_kernel_is_centered():
    m = SarmanovModel(F2, PointMass(1.0), 1.0)
    assert float(m.phi2(1.0)) == 0.0
    assert validate(m).valid


# ---- sampling ------------------------------------------------------------


@pytest.mark.parametrize("theta", [-1.0, 0.5, 1.0])
def test_fgm_sampler_marginals_and_cross_moment(theta):
    m = make_config_a(theta)
    xy = sample_joint(m, 200_000, seed=3)
    assert stats.kstest(xy[:, 0], lambda v: m.F.cdf(v)).pvalue > 0.01
    assert stats.kstest(xy[:, 1], "uniform").pvalue > 0.01
    prod = m.phi1(xy[:, 0]) * m.phi2(xy[:, 1])
    se = prod.std(ddof=1) / math.sqrt(prod.size)
    assert abs(prod.mean() - theta / 9) <= 4 * se


def test_rejection_sampler_cross_moment():
    theta = 0.8
    m = custom(pareto2_fgm_phi1, uniform_sine_phi2, theta=theta)
    xy = sample_joint(m, 200_000, seed=5)
    prod = m.phi1(xy[:, 0]) * m.phi2(xy[:, 1])
    # E[φ₁²] = 1/3 (a centred uniform transform), E[sin²(2πY)] = 1/2
    se = prod.std(ddof=1) / math.sqrt(prod.size)
    assert abs(prod.mean() - theta / 6) <= 4 * se
    assert stats.kstest(xy[:, 1], "uniform").pvalue > 0.01


def test_rejection_sampler_aborts_on_loose_bounds():
    m = custom(pareto2_fgm_phi1, uniform_fgm_phi2, theta=1.0, b1=1000.0, b2=1000.0)
    with pytest.raises(AcceptanceRateError, match="below 1%"):
        sample_joint(m, 10, seed=0)


def test_sampling_is_deterministic_and_worker_independent(config_a):
    a = sample_joint(config_a, 150_000, seed=9, workers=1)
    b = sample_joint(config_a, 150_000, seed=9, workers=4)
    np.testing.assert_array_equal(a, b)
    assert sample_joint(config_a, 0, seed=9).shape == (0, 2)
    assert not np.array_equal(a, sample_joint(config_a, 150_000, seed=10))


def test_independent_sampler_has_no_kernel_correlation(config_a0):
    xy = sample_joint(config_a0, 100_000, seed=1)
    prod = config_a0.phi1(xy[:, 0]) * config_a0.phi2(xy[:, 1])
    assert abs(prod.mean()) <= 4 * prod.std(ddof=1) / math.sqrt(prod.size)
