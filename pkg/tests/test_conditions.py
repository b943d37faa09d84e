import math

import numpy as np
import pytest
from scipy import special, stats

from conftest import make_config_a, make_type3
from sarmanov_ruin import (
    DomainError,
    Lognormal,
    ParetoTail,
    PointMass,
    RegularlyVaryingLaw,
    SarmanovModel,
    SlowlyVaryingSpec,
    Uniform,
    WeibullTail,
    classify_sv,
    dz_report,
    summability_report,
)

F2 = RegularlyVaryingLaw(2.0, 1.0)


def zeta_tail_uniform2(k: int, x):
    """P[ζ > x] for ζ a product of k Uniform(0,2) factors.

    -log(Y/2) is standard exponential, so log ζ = k log 2 - Gamma(k, 1).
    """
    z = k * math.log(2.0) - np.log(x)
    return np.where(z > 0, special.gammainc(k, np.maximum(z, 0.0)), 0.0)


# ---- classification ------------------------------------------------------


def test_classify_sv():
    assert classify_sv(SlowlyVaryingSpec("I", 1.0)) == "i"
    assert classify_sv(SlowlyVaryingSpec("III", 1.0, WeibullTail(0.5))) == "iii"
    assert classify_sv(SlowlyVaryingSpec("IV", 2.0, WeibullTail(0.5), ParetoTail(1.0, 1.0))) == "iv"
    assert classify_sv(SlowlyVaryingSpec("II", 1.0, v_law=ParetoTail(1.0))) == "ii"


# ---- dz_report -----------------------------------------------------------


def test_config_a_report(config_a):
    r = dz_report(config_a)
    assert r.l_form == "i"
    assert r.conditions["DZ1"].verdict == "pass"
    assert r.conditions["DZ1"].diagnostics["sup_ratio"] == [1.0] * 200
    assert r.conditions["DZ2"].verdict == "not-applicable"
    assert r.conditions["DZ3"].verdict == "not-applicable"
    dz4 = r.conditions["DZ4"]
    assert dz4.applicable and dz4.verdict == "pass"
    x = np.asarray(r.x_grid)
    np.testing.assert_allclose(dz4.diagnostics["m"], 2 * np.log(x), rtol=1e-12, atol=1e-15)
    assert all(v == 0.0 for v in dz4.diagnostics["o_ratio"][1:])
    assert r.hypotheses["Ḡ = o(F̄)"].verdict == "pass"
    assert r.hypotheses["E[Y^α] < ∞"].diagnostics["value"] == pytest.approx(1 / 3)


def test_config_a_verdicts_stable_under_refinement(config_a):
    coarse = dz_report(config_a, np.geomspace(1, 1e6, 200))
    fine = dz_report(config_a, np.geomspace(1, 1e6, 399))
    verdicts = lambda r: {k: v.verdict for k, v in {**r.conditions, **r.hypotheses}.items()}  # noqa: E731
    assert verdicts(coarse) == verdicts(fine)


@pytest.mark.parametrize(
    "grid",
    [np.geomspace(1, 1e5, 200), np.geomspace(1, 1e6, 5), np.geomspace(0.5, 1e6, 200), np.ones(20)],
)
def test_grid_requirements(config_a, grid):
    with pytest.raises(DomainError):
        dz_report(config_a, grid)


def test_type3_bounded_discount():
    r = dz_report(make_type3(Uniform(1.0)))
    assert r.l_form == "iii"
    dz3 = r.conditions["DZ3"]
    assert dz3.verdict == "pass"
    assert dz3.diagnostics["U in S*"]["membership"] == "pass by catalog"
    assert all(v == 0.0 for v in dz3.diagnostics["o_ratio"][1:])
    assert r.conditions["DZ2"].diagnostics["L(e^x) in S_d"]["membership"] == "pass by catalog"


def test_type3_lognormal_o_ratio():
    r = dz_report(make_type3())
    x = np.asarray(r.x_grid)
    o = np.asarray(r.conditions["DZ3"].diagnostics["o_ratio"])
    # oracle: both tails evaluated directly
    oracle = stats.lognorm(1.0).sf(x) / (x**-1.0 * np.exp(-np.sqrt(np.log(x))))
    np.testing.assert_allclose(o, oracle, rtol=1e-10)
    top = o[x >= 1e3]
    assert np.all(np.diff(top) < 0)
    assert r.conditions["DZ3"].verdict == "heuristic-pass"
    # L decreases to 0, so sup_{y<=x} L(y)/L(x) is unbounded
    assert r.conditions["DZ1"].verdict == "fail"
    # E[U] < ∞ for a Weibull U, so E[X^α] < ∞ and DZ4 does not apply
    assert r.conditions["DZ4"].verdict == "not-applicable"


def test_type4_alpha_moment_by_integral():
    finite = RegularlyVaryingLaw(1.0, 1.0, SlowlyVaryingSpec("IV", 2.0, WeibullTail(0.5), ParetoTail(1.0, 1.0)))
    infinite = RegularlyVaryingLaw(1.0, 1.0, SlowlyVaryingSpec("IV", 2.0, ParetoTail(0.5, 1.0), ParetoTail(1.0, 1.0)))
    r1 = dz_report(SarmanovModel(finite, Uniform(1.0), 0.5))
    r2 = dz_report(SarmanovModel(infinite, Uniform(1.0), 0.5))
    assert not r1.conditions["DZ4"].applicable
    assert r2.conditions["DZ4"].applicable
    for r in (r1, r2):
        m = r.conditions["DZ4"].diagnostics["m"]
        assert np.all(np.diff(m) >= 0)


def test_report_serializes(config_a):
    import json

    json.dumps(dz_report(config_a).as_dict())


# ---- summability ---------------------------------------------------------


@pytest.mark.parametrize("variant", ["DZ2", "DZ4"])
def test_bounded_discount_below_one_gives_zero_constants(config_a, variant):
    rep = summability_report(config_a, variant, i_max=12)
    assert rep.c_values == [0.0] * 11
    assert all(rep.c_exact)
    assert rep.verdict == "converged"


def test_bounded_discount_dz3_variant():
    rep = summability_report(make_type3(Uniform(0.9)), "DZ3", i_max=6)
    assert rep.c_values == [0.0] * 5
    assert rep.verdict == "converged"
    with pytest.raises(DomainError):
        summability_report(make_config_a(), "DZ3")


def test_uniform_0_2_constants_match_gamma_oracle():
    m = SarmanovModel(F2, Uniform(2.0), 1.0)
    x = np.geomspace(1, 1e6, 200)
    rep = summability_report(m, "DZ2", i_max=12, mc_n=1_000_000, seed=0)
    oracle = [float(np.max(zeta_tail_uniform2(i - 1, x) * x**2)) for i in range(2, 13)]
    for got, se, want in zip(rep.c_values, rep.c_stderr, oracle):
        assert abs(got - want) <= 5 * se + 1e-3 * want
    # E[Y^2] = 4/3 > 1: the exact constants grow, and the fit says so
    assert all(b > a for a, b in zip(oracle[1:], oracle[2:]))
    assert rep.verdict == "diverging"
    assert rep.fit_r > 1


def test_dz1_variant_is_automatic(config_a):
    rep = summability_report(config_a, "DZ1", i_max=5)
    assert rep.verdict == "automatic"
    np.testing.assert_allclose(rep.c_values, [3.0 ** -(i - 1) for i in range(2, 6)], rtol=1e-12)


def test_exponent_branches():
    low = SarmanovModel(RegularlyVaryingLaw(0.5, 1.0), Uniform(1.0), 0.0)
    assert summability_report(low, "DZ2").exponent == 1.0
    assert summability_report(low, "DZ2").alpha_branch == "alpha<1"
    rep = summability_report(make_config_a(), "DZ2", epsilon=0.25)
    assert rep.exponent == pytest.approx(1 / 2.25)
    assert rep.alpha_branch == "alpha>=1"


def test_point_mass_is_exact():
    m = SarmanovModel(F2, PointMass(2.0), 0.5)
    x = np.geomspace(1, 1e6, 200)
    rep = summability_report(m, "DZ2", i_max=6, x_grid=x)
    assert all(rep.c_exact)
    for i, c in zip(range(2, 7), rep.c_values):
        below = x[x < 2.0 ** (i - 1)]
        assert c == pytest.approx(float(np.max(below**2)))


def test_too_few_samples_is_inconclusive():
    m = SarmanovModel(F2, Uniform(2.0), 1.0)
    rep = summability_report(m, "DZ2", i_max=8, mc_n=200, seed=1)
    assert rep.verdict == "inconclusive"
    assert rep.notes


@pytest.mark.parametrize("kwargs", [{"epsilon": 0.0}, {"i_max": 1}, {"variant": "DZ5"}])
def test_summability_arguments(config_a, kwargs):
    with pytest.raises(DomainError):
        summability_report(config_a, **kwargs)


def test_summability_deterministic():
    m = SarmanovModel(F2, Lognormal(-0.5, 0.5), 0.5)
    a = summability_report(m, "DZ2", i_max=5, mc_n=100_000, seed=3, workers=1)
    b = summability_report(m, "DZ2", i_max=5, mc_n=100_000, seed=3, workers=4)
    assert a == b
    assert all(c >= 0 for c in a.c_values)
