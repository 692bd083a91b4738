"""Model description and both path simulators."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from endogrid import (
    GridScheme,
    JumpSpec,
    ModelSpec,
    SizeLaw,
    TimeFunction,
    euler_first_exit_times,
    extract_observations,
    simulate_euler_bridge,
    simulate_exact,
    simulate_jumps,
)
from endogrid._codes import KIND_EXIT, KIND_JUMP, OBS_JUMP
from endogrid.errors import ConfigError, UnsupportedSchemeError


def bm_spec(t_max=1.0, jumps=None):
    return ModelSpec(drift=TimeFunction.constant(0.0),
                     vol=TimeFunction.constant(1.0),
                     jumps=jumps if jumps is not None else JumpSpec.none(),
                     t_max=t_max)


# ---------------------------------------------------------------------------
# TimeFunction


def test_time_function_values():
    f = TimeFunction.linear(1.0, 0.5)
    assert f(0.0) == 1.0
    assert f(2.0) == 2.0
    out = f(np.array([0.0, 1.0]))
    assert out.tolist() == [1.0, 1.5]
    g = TimeFunction.sinusoid(2.0, 0.5, 3.0, phase=0.25)
    assert g(0.7) == pytest.approx(
        2.0 + 0.5 * math.sin(2.0 * math.pi * 3.0 * 0.7 + 0.25))


def test_time_function_bounds_attained():
    g = TimeFunction.sinusoid(2.0, 0.5, 20.0)  # period 0.05
    lo, hi = g.bounds(1.0)
    t = np.linspace(0.0, 1.0, 20001)
    vals = g(t)
    assert lo <= float(np.min(vals)) + 1e-9
    assert hi >= float(np.max(vals)) - 1e-9
    assert lo == pytest.approx(1.5) and hi == pytest.approx(2.5)
    # horizon shorter than a quarter period: the extremes are not reached
    lo2, hi2 = g.bounds(0.005)
    assert lo2 == pytest.approx(2.0) and hi2 == pytest.approx(g(0.005))


def test_time_function_integrals_match_quadrature():
    for f in (TimeFunction.constant(1.3),
              TimeFunction.linear(0.7, -0.2),
              TimeFunction.sinusoid(1.1, 0.4, 5.0, phase=0.3)):
        for t in (0.35, 1.0, 2.6):
            ref, _ = quad(f, 0.0, t)
            assert f.integral(t) == pytest.approx(ref, abs=1e-10)
            ref2, _ = quad(lambda s: f(s) ** 2, 0.0, t)
            assert f.integral_sq(t) == pytest.approx(ref2, abs=1e-10)


def test_time_function_inverse_integral_sq():
    for f in (TimeFunction.constant(0.8),
              TimeFunction.linear(1.0, 0.5),
              TimeFunction.sinusoid(1.2, 0.3, 4.0)):
        for t in (0.2, 0.9, 1.7):
            v = f.integral_sq(t)
            assert f.inverse_integral_sq(v, hi=2.0) == pytest.approx(t, abs=1e-9)
    arr = TimeFunction.constant(2.0).inverse_integral_sq(
        np.array([0.0, 4.0]), hi=3.0)
    assert arr.tolist() == [0.0, 1.0]


# ---------------------------------------------------------------------------
# SizeLaw / JumpSpec / ModelSpec validation


def test_size_law_draws():
    rng = np.random.default_rng(1)
    assert np.all(SizeLaw.constant(0.5).draw(rng, 4) == 0.5)
    u = SizeLaw.uniform(-2.0, -1.0).draw(rng, 1000)
    assert np.all((u >= -2.0) & (u <= -1.0))
    c = SizeLaw.choice((1.0, -0.7), (0.25, 0.75)).draw(rng, 2000)
    assert set(np.unique(c)) <= {1.0, -0.7}
    assert float(np.mean(c == -0.7)) == pytest.approx(0.75, abs=0.05)
    n = SizeLaw.normal(0.0, 1.0).draw(rng, 10)
    assert n.shape == (10,)


def test_size_law_validation():
    with pytest.raises(ConfigError):
        SizeLaw.uniform(1.0, 1.0)
    with pytest.raises(ConfigError):
        SizeLaw.normal(0.0, -1.0)
    with pytest.raises(ConfigError):
        SizeLaw.choice((1.0, 2.0), (0.5, 0.6))


def test_jump_spec_validation():
    JumpSpec.fixed((0.3, 0.8), (1.0, -0.7))
    with pytest.raises(ConfigError):
        JumpSpec.fixed((0.8, 0.3), (1.0, -0.7))  # not increasing
    with pytest.raises(ConfigError):
        JumpSpec.fixed((0.0, 0.5), (1.0, 1.0))   # time must be positive
    with pytest.raises(ConfigError):
        JumpSpec.fixed((0.5,), (math.inf,))


def test_model_spec_validation():
    with pytest.raises(ConfigError):
        ModelSpec(drift=TimeFunction.constant(0.0),
                  vol=TimeFunction.constant(0.0), t_max=1.0, jumps=JumpSpec.none())
    with pytest.raises(ConfigError):
        ModelSpec(drift=TimeFunction.constant(0.0),
                  vol=TimeFunction.linear(0.1, -1.0), t_max=1.0, jumps=JumpSpec.none())
    with pytest.raises(ConfigError):
        bm_spec(t_max=0.0)
    with pytest.raises(ConfigError):
        bm_spec(jumps=JumpSpec.fixed((1.5,), (1.0,)))  # beyond horizon
    with pytest.raises(ConfigError):
        bm_spec(jumps=JumpSpec.poisson(TimeFunction.constant(-1.0),
                                       SizeLaw.constant(1.0)))


# ---------------------------------------------------------------------------
# Jump simulation


def test_fixed_jumps_are_verbatim():
    spec = bm_spec(jumps=JumpSpec.fixed((0.3, 0.8), (1.0, -0.7)))
    recs = simulate_jumps(spec, np.random.default_rng(0))
    assert [(r.time, r.size) for r in recs] == [(0.3, 1.0), (0.8, -0.7)]
    assert math.isnan(recs[0].left)


def test_poisson_jump_count_mean():
    lam = TimeFunction.sinusoid(2.0, 1.0, 1.0)  # one full period on [0, 1]
    spec = bm_spec(jumps=JumpSpec.poisson(lam, SizeLaw.constant(1.0)))
    rng = np.random.default_rng(123)
    counts = [len(simulate_jumps(spec, rng)) for _ in range(3000)]
    target = lam.integral(1.0)  # = 2 over one full period
    assert target == pytest.approx(2.0, abs=1e-12)
    se = math.sqrt(target / 3000)
    assert float(np.mean(counts)) == pytest.approx(target, abs=4 * se)


def test_poisson_jumps_sorted_and_sized():
    lam = TimeFunction.constant(5.0)
    spec = bm_spec(jumps=JumpSpec.poisson(lam, SizeLaw.uniform(0.5, 1.5)))
    recs = simulate_jumps(spec, np.random.default_rng(7))
    times = [r.time for r in recs]
    assert times == sorted(times)
    assert all(0.5 <= r.size <= 1.5 for r in recs)
    assert [r.p for r in recs] == list(range(len(recs)))


# ---------------------------------------------------------------------------
# Exact scheme


def test_exact_rejects_drift():
    spec = ModelSpec(drift=TimeFunction.constant(0.5),
                     vol=TimeFunction.constant(1.0), t_max=1.0, jumps=JumpSpec.none())
    with pytest.raises(UnsupportedSchemeError, match="euler-bridge"):
        simulate_exact(spec, GridScheme(eps=0.1), np.random.default_rng(0))


def test_exact_exits_are_exact_grid_steps():
    grid = GridScheme(eps=0.05)
    path = simulate_exact(bm_spec(), grid, np.random.default_rng(2))
    path.validate()
    s = extract_observations(path, grid)
    # observed values are exact grid multiples moving one line at a time
    w = grid.width
    k = np.round(s.values / w)
    assert np.array_equal(s.values, k * w)
    assert np.all(np.abs(np.diff(k)) == 1)


def test_exact_observation_count_mean():
    # E[N] ~ integral of sigma^2 / width^2
    grid = GridScheme(eps=0.05)
    rng = np.random.default_rng(3)
    spec = bm_spec()
    counts = [extract_observations(simulate_exact(spec, grid, rng),
                                   grid).n_observations for _ in range(150)]
    target = spec.vol.integral_sq(1.0) / grid.width ** 2  # 400
    # renewal CLT: Var(N) ~ (Var T / E[T]^3) * Lambda = (2/3) * target
    se = math.sqrt(2.0 / 3.0 * target / 150)
    assert float(np.mean(counts)) == pytest.approx(target, abs=5 * se)


def test_exact_time_varying_vol_count():
    grid = GridScheme(eps=0.05)
    spec = ModelSpec(drift=TimeFunction.constant(0.0),
                     vol=TimeFunction.linear(1.0, 0.5), t_max=1.0, jumps=JumpSpec.none())
    rng = np.random.default_rng(4)
    counts = [extract_observations(simulate_exact(spec, grid, rng),
                                   grid).n_observations for _ in range(150)]
    target = spec.vol.integral_sq(1.0) / grid.width ** 2  # 19/12 / w^2
    assert float(np.mean(counts)) == pytest.approx(target, rel=0.03)


def test_exact_forced_big_jump_observed_at_its_time():
    grid = GridScheme(eps=0.05)
    size = 3.0 * grid.width
    spec = bm_spec(jumps=JumpSpec.fixed((0.5,), (size,)))
    for seed in range(10):
        path = simulate_exact(spec, grid, np.random.default_rng(seed))
        s = extract_observations(path, grid)
        assert 0.5 in s.times.tolist()
        j = s.times.tolist().index(0.5)
        assert s.causes[j] == OBS_JUMP


def test_exact_jump_record_embedding():
    grid = GridScheme(eps=0.05)
    spec = bm_spec(jumps=JumpSpec.fixed((0.25, 0.75), (0.3, -0.2)))
    path = simulate_exact(spec, grid, np.random.default_rng(9))
    assert len(path.jumps) == 2
    for rec in path.jumps:
        assert rec.right - rec.left == pytest.approx(rec.size, abs=1e-12)
        j = int(np.searchsorted(path.times, rec.time))
        assert path.times[j] == rec.time
        assert path.kinds[j] == KIND_JUMP
        assert path.values[j] == pytest.approx(rec.right, abs=1e-12)


def test_exact_determinism():
    grid = GridScheme(eps=0.02)
    spec = bm_spec(jumps=JumpSpec.poisson(TimeFunction.constant(3.0),
                                          SizeLaw.uniform(-0.2, 0.2)))
    a = simulate_exact(spec, grid, np.random.default_rng(77))
    b = simulate_exact(spec, grid, np.random.default_rng(77))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.kinds, b.kinds)


def test_exact_nonzero_start():
    grid = GridScheme(eps=0.1)
    spec = ModelSpec(drift=TimeFunction.constant(0.0),
                     vol=TimeFunction.constant(1.0), t_max=0.5, x0=0.37, jumps=JumpSpec.none())
    path = simulate_exact(spec, grid, np.random.default_rng(11))
    assert path.values[0] == 0.37
    s = extract_observations(path, grid)
    assert s.values[0] == 0.37
    if s.n_observations:
        # first exit leaves the single cell (0.3, 0.4)
        assert s.values[1] in (pytest.approx(0.3), pytest.approx(0.4))


# ---------------------------------------------------------------------------
# Euler bridge scheme


def test_euler_default_step_satisfies_precondition():
    grid = GridScheme(eps=0.05)
    spec = bm_spec()
    path = simulate_euler_bridge(spec, grid, None, np.random.default_rng(1))
    dt = np.diff(path.times[path.kinds != KIND_EXIT][:16])
    assert np.max(dt) <= grid.width ** 2 / 50.0 + 1e-15


def test_euler_rejects_coarse_step():
    grid = GridScheme(eps=0.05)
    with pytest.raises(ConfigError):
        simulate_euler_bridge(bm_spec(), grid, grid.width ** 2,
                              np.random.default_rng(0))


def test_euler_drift_pushes_up():
    # strong positive drift: upward exits dominate
    grid = GridScheme(eps=0.01)
    spec = ModelSpec(drift=TimeFunction.constant(5.0),
                     vol=TimeFunction.constant(1.0), t_max=0.3, jumps=JumpSpec.none())
    rng = np.random.default_rng(6)
    ups = downs = 0
    for _ in range(40):
        s = extract_observations(
            simulate_euler_bridge(spec, grid, None, rng), grid)
        inc = np.diff(s.values)
        ups += int(np.sum(inc > 0))
        downs += int(np.sum(inc < 0))
    frac = ups / (ups + downs)
    # two-sided exit probability for drift mu, half-width h:
    # p_up = (1 - exp(-2 mu h)) / (1 - exp(-4 mu h)) = 0.52498 at mu=5, h=0.01
    assert frac == pytest.approx(0.525, abs=0.01)


def test_euler_jump_knots_and_embedding():
    grid = GridScheme(eps=0.05)
    spec = bm_spec(jumps=JumpSpec.fixed((0.333,), (0.4,)))
    path = simulate_euler_bridge(spec, grid, None, np.random.default_rng(8))
    j = int(np.searchsorted(path.times, 0.333))
    assert path.times[j] == 0.333
    assert path.kinds[j] == KIND_JUMP
    rec = path.jumps[0]
    assert rec.right - rec.left == pytest.approx(0.4, abs=1e-12)
    s = extract_observations(path, grid)
    assert 0.333 in s.times.tolist()


def test_euler_determinism():
    grid = GridScheme(eps=0.05)
    a = simulate_euler_bridge(bm_spec(), grid, None, np.random.default_rng(5))
    b = simulate_euler_bridge(bm_spec(), grid, None, np.random.default_rng(5))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.values, b.values)


def test_euler_observation_count_mean():
    grid = GridScheme(eps=0.1)
    rng = np.random.default_rng(10)
    spec = bm_spec()
    counts = [extract_observations(simulate_euler_bridge(spec, grid, None, rng),
                                   grid).n_observations for _ in range(150)]
    target = 1.0 / grid.width ** 2
    assert float(np.mean(counts)) == pytest.approx(target, rel=0.04)


def test_euler_first_exit_times_mean():
    rng = np.random.default_rng(12)
    t = euler_first_exit_times(20_000, 0.004, rng)
    assert t.shape == (20_000,)
    assert np.all(t > 0.0)
    # E[T] = 1, Var = 2/3; allow a small discretization bias
    assert float(np.mean(t)) == pytest.approx(1.0, abs=0.02)
    assert float(np.var(t)) == pytest.approx(2.0 / 3.0, rel=0.06)


def test_horizon_sample_present():
    grid = GridScheme(eps=0.05)
    for sim in (simulate_exact, lambda sp, g, r: simulate_euler_bridge(sp, g, None, r)):
        path = sim(bm_spec(), grid, np.random.default_rng(13))
        assert path.times[-1] == 1.0
        path.validate()
