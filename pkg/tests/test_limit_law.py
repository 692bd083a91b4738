"""Limit-law layer: kernel, exit/age/overshoot laws, tables, samplers.

Reference values were computed with the independent quadrature oracle in
``tests/_oracles.py`` (image-charge series integrated with Simpson rules at
much finer resolution than the production tables) and frozen here.
"""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, simpson
from scipy.special import ndtr
from scipy.stats import kstest

from endogrid import limit_law
from endogrid.limit_law import (
    ConfinedKernel,
    EtaDistribution,
    ExitTimeDistribution,
    RenewalAgeDistribution,
    confined_kernel,
    eval_h,
    eval_h_closed,
    exit_time_cdf,
    exit_time_survival,
    renewal_age_cdf,
    sample_confined_position,
    sample_eta,
    sample_exit,
    sample_renewal_age,
)

from _oracles import (
    confined_position_cdf,
    exit_time_survival_spectral,
    overshoot_second_moment,
)

# Oracle-frozen values (unit cell, unit volatility).
F_UNIT = {
    0.1: 0.003130804516,
    0.25: 0.091000523846,
    0.5: 0.314554233110,
    1.0: 0.629222570200,
    2.0: 0.892022955556,
    5.0: 0.997333365998,
}
G_UNIT = {
    0.1: 0.099956261673,
    0.25: 0.244231273334,
    1.0: 0.699454529574,
    3.0: 0.974512200828,
}
K_UNIT = {  # confined kernel mass on [-1, y] at time z: (z, y) -> integral
    (0.25, 0.0): 0.454499738077,
    (0.25, 0.5): 0.794494872767,
    (1.0, 0.0): 0.185388714900,
    (1.0, -0.5): 0.054294577112,
    (2.0, 0.3): 0.078498798475,
}


# ---------------------------------------------------------------------------
# Exit-time law F


def test_exit_cdf_matches_oracle():
    for z, ref in F_UNIT.items():
        assert exit_time_cdf(z) == pytest.approx(ref, abs=1e-10)


def test_exit_cdf_scaling():
    # F(z; c, sigma) = F_unit(z sigma^2 / c^2)
    for z in (0.3, 1.7):
        assert exit_time_cdf(z, c_half=2.0, sigma=0.5) == pytest.approx(
            exit_time_cdf(z / 16.0), rel=1e-12)


def test_exit_cdf_edge_cases():
    assert exit_time_cdf(0.0) == 0.0
    assert exit_time_cdf(80.0) == pytest.approx(1.0, abs=1e-12)
    out = exit_time_cdf(np.array([0.5, 1.0]))
    assert out.shape == (2,)
    with pytest.raises(ValueError):
        exit_time_cdf(-1.0)
    with pytest.raises(ValueError):
        exit_time_cdf(1.0, c_half=0.0)


def test_exit_survival_complements_cdf():
    z = np.linspace(0.05, 12.0, 241)
    total = exit_time_survival(z) + exit_time_cdf(z)
    assert np.max(np.abs(total - 1.0)) < 1e-10


def test_exit_series_switch_is_seamless():
    # Both representations must agree across the image/spectral switch point.
    z = np.linspace(0.8, 1.2, 81)
    f = exit_time_cdf(z)
    assert np.all(np.diff(f) > 0.0)
    # second differences stay tiny: no kink at the switch
    d2 = np.diff(f, 2)
    assert np.max(np.abs(d2)) < 1e-4


def test_exit_mean_and_second_moment():
    # E[T] = 1 for the unit cell; E[T^2] = 5/3.
    z = np.linspace(0.0, 60.0, 120_001)
    surv = exit_time_survival(z)
    assert simpson(surv, x=z) == pytest.approx(1.0, abs=1e-9)
    assert simpson(2.0 * z * surv, x=z) == pytest.approx(5.0 / 3.0, abs=1e-8)
    # cheap spot check against the independent eigenfunction series
    assert exit_time_survival_spectral(2.0) == pytest.approx(
        float(exit_time_survival(2.0)), abs=1e-12)


def test_exit_distribution_facade_validation():
    with pytest.raises(ValueError):
        ExitTimeDistribution(c_half=0.0)
    with pytest.raises(ValueError):
        ExitTimeDistribution(sigma=-1.0)
    law = ExitTimeDistribution(c_half=3.0, sigma=1.5)
    assert law.mean() == pytest.approx(4.0)


def test_exit_tabulation_monotone(tables):
    law = ExitTimeDistribution(tables=tables)
    z, f = law.tabulation()
    # In the extreme left tail the CDF falls below double-precision
    # resolution, so consecutive knots can coincide; once the CDF is
    # resolvable the tabulation must be strictly increasing.
    assert np.all(np.diff(z) >= 0.0)
    bulk = f[:-1] > 1e-12
    assert np.all(np.diff(z)[bulk] > 0.0)
    assert np.all(np.diff(f) > 0.0)
    # tabulated knots agree with the direct CDF
    sub = slice(200, 4000, 97)
    assert np.max(np.abs(exit_time_cdf(z[sub]) - f[sub])) < 1e-9


# ---------------------------------------------------------------------------
# Renewal age law G


def test_age_cdf_matches_oracle():
    for z, ref in G_UNIT.items():
        assert renewal_age_cdf(z) == pytest.approx(ref, abs=2e-9)


def test_age_cdf_scaling_and_edges():
    assert renewal_age_cdf(0.0) == 0.0
    assert renewal_age_cdf(60.0) == pytest.approx(1.0, abs=1e-10)
    assert renewal_age_cdf(0.5, c_half=2.0, sigma=1.0) == pytest.approx(
        renewal_age_cdf(0.125), rel=1e-10)


def test_age_mean_is_five_sixths():
    # E[age] = E[T^2] / (2 E[T]) = 5/6 for the unit cell.
    z = np.linspace(0.0, 40.0, 2001)
    mean = simpson(1.0 - renewal_age_cdf(z), x=z)
    assert mean == pytest.approx(5.0 / 6.0, abs=1e-6)


# ---------------------------------------------------------------------------
# Overshoot density h


def test_h_equals_triangle(tables):
    y = np.linspace(-1.0, 1.0, 513)
    dev = np.abs(eval_h(y) - (1.0 - np.abs(y)))
    assert float(np.max(dev)) < 1e-6
    assert tables.h_closed_ok
    assert tables.h_max_dev < 1e-7


def test_h_closed_form_values():
    assert eval_h_closed(0.0) == 1.0
    assert eval_h_closed(0.5) == 0.5
    assert eval_h_closed(-0.25) == 0.75
    assert eval_h_closed(1.0) == 0.0
    assert eval_h_closed(1.5) == 0.0


def test_h_normalization_and_variance(tables):
    y = tables.h_grid
    w = np.trapezoid if hasattr(np, "trapezoid") else np.trapz
    assert w(tables.h_vals, y) == pytest.approx(1.0, abs=1e-7)
    assert tables.eta_variance == pytest.approx(1.0 / 6.0, abs=1e-6)
    assert overshoot_second_moment() == pytest.approx(1.0 / 6.0, abs=1e-6)


def test_eta_cdf_closed_form(tables):
    eta = EtaDistribution(tables=tables)
    assert eta.cdf(-1.0) == 0.0
    assert eta.cdf(0.0) == 0.5
    assert eta.cdf(1.0) == 1.0
    assert eta.cdf(-0.5) == pytest.approx(0.125)
    assert eta.cdf(0.5) == pytest.approx(0.875)
    arr = eta.cdf(np.array([-2.0, 0.0, 2.0]))
    assert arr.tolist() == [0.0, 0.5, 1.0]


def test_eta_sampler_moments(tables):
    rng = np.random.default_rng(11)
    x = sample_eta(rng, n=200_000, tables=tables)
    assert np.all(np.abs(x) < 1.0)
    assert abs(float(np.mean(x))) < 4.0 * math.sqrt(1.0 / 6.0 / 2e5)
    assert float(np.var(x)) == pytest.approx(1.0 / 6.0, rel=0.02)


def test_eta_table_fallback_agrees_with_closed_form(tables):
    # Force the tabulated-inverse path and compare against the analytic one.
    forced = dataclasses.replace(tables, h_closed_ok=False)
    rng = np.random.default_rng(7)
    x = sample_eta(rng, n=100_000, tables=forced)
    eta = EtaDistribution(tables=tables)
    stat = kstest(x, eta.cdf).statistic
    assert stat < 0.006


# ---------------------------------------------------------------------------
# Confined kernel


def test_confined_kernel_symmetry_and_domain():
    y = np.linspace(-0.9, 0.9, 37)
    k = confined_kernel(0.7, y)
    assert np.max(np.abs(k - k[::-1])) < 1e-12
    assert confined_kernel(0.5, 1.2) == 0.0
    assert confined_kernel(0.5, -1.0) == 0.0
    with pytest.raises(ValueError):
        confined_kernel(0.0, 0.2)
    with pytest.raises(ValueError):
        confined_kernel(-1.0, 0.2)


def test_confined_kernel_switch_is_seamless():
    y = np.linspace(-0.95, 0.95, 41)
    lo = confined_kernel(limit_law.Z_SWITCH * (1.0 - 1e-9), y)
    hi = confined_kernel(limit_law.Z_SWITCH * (1.0 + 1e-9), y)
    assert np.max(np.abs(lo - hi)) < 1e-8


def test_confined_kernel_mass_matches_oracle():
    for (z, y), ref in K_UNIT.items():
        val, err = quad(lambda t: confined_kernel(z, t), -1.0, y, limit=200)
        assert val == pytest.approx(ref, abs=1e-8)
        assert confined_position_cdf(z, y) == pytest.approx(ref, abs=1e-8)


def test_confined_kernel_total_mass_is_survival():
    for z in (0.3, 1.0, 2.5):
        mass, _ = quad(lambda t: confined_kernel(z, t), -1.0, 1.0, limit=200)
        assert mass == pytest.approx(exit_time_survival(z), abs=1e-9)


def test_confined_sampler_gaussian_branch(tables):
    rng = np.random.default_rng(3)
    z = 0.005
    x = sample_confined_position(z, rng, n=20_000, tables=tables)
    stat = kstest(x, lambda t: ndtr(t / math.sqrt(z))).statistic
    assert stat < 0.015


def test_confined_sampler_ground_state_branch(tables):
    # Long occupation: position conditioned on survival settles into the
    # ground-state law with CDF (1 + sin(pi t / 2)) / 2.
    rng = np.random.default_rng(4)
    x = sample_confined_position(7.0, rng, n=20_000, tables=tables)
    gs_cdf = lambda t: 0.5 * (1.0 + np.sin(0.5 * math.pi * np.clip(t, -1, 1)))
    stat = kstest(x, gs_cdf)
    assert stat.statistic < 0.015
    # and the exact conditional kernel at z=7 is itself that close
    y = np.linspace(-0.99, 0.99, 21)
    mass = confined_position_cdf(7.0, 1.0)
    exact = np.array([confined_position_cdf(7.0, t) for t in y]) / mass
    assert np.max(np.abs(exact - gs_cdf(y))) < 1e-3


def test_confined_sampler_table_branch(tables):
    rng = np.random.default_rng(5)
    z = 0.25
    x = sample_confined_position(z, rng, n=200_000, tables=tables)
    surv = 1.0 - F_UNIT[0.25]
    # conditional CDF at 0 is 1/2 by symmetry; at 0.5 use the frozen mass
    p0 = float(np.mean(x <= 0.0))
    p5 = float(np.mean(x <= 0.5))
    assert p0 == pytest.approx(0.5, abs=0.004)
    assert p5 == pytest.approx(K_UNIT[(0.25, 0.5)] / surv, abs=0.004)


def test_confined_sampler_rejects_bad_time(tables):
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_confined_position(0.0, rng, n=4, tables=tables)
    with pytest.raises(ValueError):
        sample_confined_position(np.array([0.5, -1.0]), rng, n=2,
                                 tables=tables)


def test_confined_mixture_over_age_reproduces_overshoot(tables):
    # Settling the confined motion at a stationary age reproduces the
    # overshoot law; this ties the three tabulated objects together.
    rng = np.random.default_rng(19)
    n = 300_000
    ages = sample_renewal_age(rng, n=n, tables=tables)
    y = sample_confined_position(ages, rng, n=n, tables=tables)
    eta = EtaDistribution(tables=tables)
    stat = kstest(y, eta.cdf).statistic
    assert stat < 0.005


# ---------------------------------------------------------------------------
# Samplers against their own laws


def test_exit_sampler_against_cdf(tables):
    rng = np.random.default_rng(21)
    times, sides = sample_exit(rng, n=50_000, tables=tables)
    assert set(np.unique(sides)) == {-1, 1}
    assert abs(float(np.mean(sides))) < 4.0 / math.sqrt(50_000)
    stat = kstest(times, exit_time_cdf).statistic
    assert stat < 0.008
    assert float(np.mean(times)) == pytest.approx(1.0, abs=0.02)
    assert float(np.var(times)) == pytest.approx(2.0 / 3.0, rel=0.05)


def test_exit_sampler_scaling(tables):
    rng = np.random.default_rng(22)
    t, _ = sample_exit(rng, c_half=2.0, sigma=0.5, n=50_000, tables=tables)
    assert float(np.mean(t)) == pytest.approx(16.0, rel=0.02)


def test_exit_sampler_scalar_form(tables):
    rng = np.random.default_rng(23)
    t, s = sample_exit(rng, tables=tables)
    assert isinstance(t, float) and s in (-1, 1)
    with pytest.raises(ValueError):
        sample_exit(rng, c_half=-1.0, tables=tables)


def test_age_sampler_against_cdf(tables):
    rng = np.random.default_rng(24)
    ages = sample_renewal_age(rng, n=50_000, tables=tables)
    stat = kstest(ages, renewal_age_cdf).statistic
    assert stat < 0.008
    assert float(np.mean(ages)) == pytest.approx(5.0 / 6.0, rel=0.03)


def test_renewal_age_facade(tables):
    law = RenewalAgeDistribution(
        exit_law=ExitTimeDistribution(c_half=2.0, sigma=1.0, tables=tables))
    assert law.cdf(1.0) == pytest.approx(renewal_age_cdf(0.25), rel=1e-10)
    z, g = law.tabulation()
    assert np.all(np.diff(z) > 0.0)
    assert np.all(np.diff(g) > 0.0)


def test_confined_facade(tables):
    ck = ConfinedKernel(tables=tables)
    assert ck.z_switch == limit_law.Z_SWITCH
    assert ck.value(0.5, 0.1) == pytest.approx(confined_kernel(0.5, 0.1))
    assert ck.survival(0.5) == pytest.approx(exit_time_survival(0.5))


def test_sampler_determinism(tables):
    a = sample_eta(np.random.default_rng(99), n=1000, tables=tables)
    b = sample_eta(np.random.default_rng(99), n=1000, tables=tables)
    assert np.array_equal(a, b)


def test_tables_cache_and_validation(tables):
    assert limit_law.get_tables(1e-8) is tables
    with pytest.raises(ValueError):
        limit_law.LimitLawTables.build(tol=0.0)


# ---------------------------------------------------------------------------
# Property tests (kept small: each example evaluates series numerically)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.02, max_value=20.0),
       st.floats(min_value=0.02, max_value=20.0))
def test_exit_cdf_monotone(z1, z2):
    lo, hi = sorted((z1, z2))
    assert exit_time_cdf(lo) <= exit_time_cdf(hi) + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-1.0, max_value=1.0))
def test_h_symmetric(y):
    assert eval_h_closed(y) == pytest.approx(eval_h_closed(-y), abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.05, max_value=8.0),
       st.floats(min_value=-0.999, max_value=0.999))
def test_confined_kernel_nonnegative(z, y):
    assert confined_kernel(z, y) >= 0.0
