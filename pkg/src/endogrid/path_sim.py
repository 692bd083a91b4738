"""Model specification and path simulators.

The model is an Ito semimartingale with deterministic coefficients,

    X_t = X_0 + int_0^t a(s) ds + int_0^t sigma(s) dW_s + J_t,

where J is a finite-activity jump process with deterministic intensity.
Two simulators produce the same ``InternalPath`` container:

* ``simulate_exact`` handles the driftless case by working in operational
  time v = int sigma^2. There the continuous part is a standard Brownian
  motion and cell exits can be drawn from the first-exit law directly, so
  paths are exact in distribution at every emitted sample. On-grid runs
  are batched through the table kernels; off-center positions (after an
  interior jump, or an off-grid start) walk nested centered intervals
  until a cell boundary is hit exactly.

* ``simulate_euler_bridge`` discretizes time with step ``delta``, refines
  the step grid with the jump times and the horizon, and corrects each
  step with Brownian-bridge boundary tests so cell exits are not missed
  between knots.

Reproducibility: for a fixed seed, draws are consumed in a documented
block order (see each simulator), and both backends consume identical
blocks, so outputs are byte-identical across backends and runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import backend, limit_law
from ._codes import KIND_EXIT, KIND_JUMP, KIND_STEP
from .errors import ConfigError, UnsupportedSchemeError
from .scheme import GridScheme, InternalPath, JumpRecord, _cell_lines

__all__ = [
    "TimeFunction",
    "SizeLaw",
    "JumpSpec",
    "ModelSpec",
    "simulate_jumps",
    "simulate_exact",
    "simulate_euler_bridge",
    "euler_first_exit_times",
]

_TF_KINDS = ("constant", "linear", "sinusoid")
_SIZE_KINDS = ("constant", "uniform", "normal", "choice")
_JUMP_KINDS = ("none", "poisson", "fixed")

_CHUNK_STEPS = 1 << 16
_BATCH_CAP = 1 << 20


@dataclass(frozen=True)
class TimeFunction:
    """Deterministic function of time: constant, linear, or sinusoid.

    sinusoid(t) = value + amplitude * sin(2*pi*frequency*t + phase).
    """

    kind: str
    value: float = 0.0
    slope: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in _TF_KINDS:
            raise ConfigError(
                f"TimeFunction kind {self.kind!r} not one of {_TF_KINDS}")
        for name in ("value", "slope", "amplitude", "frequency", "phase"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"TimeFunction: {name} must be finite")

    @classmethod
    def constant(cls, value: float) -> "TimeFunction":
        return cls(kind="constant", value=float(value))

    @classmethod
    def linear(cls, value: float, slope: float) -> "TimeFunction":
        return cls(kind="linear", value=float(value), slope=float(slope))

    @classmethod
    def sinusoid(cls, value: float, amplitude: float, frequency: float,
                 phase: float = 0.0) -> "TimeFunction":
        return cls(kind="sinusoid", value=float(value),
                   amplitude=float(amplitude), frequency=float(frequency),
                   phase=float(phase))

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "constant":
            out = np.full(t.shape, self.value)
        elif self.kind == "linear":
            out = self.value + self.slope * t
        else:
            out = self.value + self.amplitude * np.sin(
                2.0 * math.pi * self.frequency * t + self.phase)
        return out if out.shape else float(out)

    def bounds(self, t: float) -> tuple[float, float]:
        """Attained (min, max) over [0, t]."""
        if t < 0.0 or not math.isfinite(t):
            raise ValueError("bounds: t must be nonnegative and finite")
        if self.kind == "constant":
            return self.value, self.value
        if self.kind == "linear":
            ends = (self.value, self.value + self.slope * t)
            return min(ends), max(ends)
        om = 2.0 * math.pi * self.frequency
        if om == 0.0 or self.amplitude == 0.0:
            v = self.value + self.amplitude * math.sin(self.phase)
            return v, v
        cands = [float(self(0.0)), float(self(t))]
        # Interior extrema of sin at phase angles pi/2 + k*pi.
        th0, th1 = self.phase, self.phase + om * t
        if th1 < th0:
            th0, th1 = th1, th0
        k0 = math.ceil((th0 - math.pi / 2.0) / math.pi)
        k1 = math.floor((th1 - math.pi / 2.0) / math.pi)
        for k in range(k0, k1 + 1):
            s = 1.0 if k % 2 == 0 else -1.0
            cands.append(self.value + self.amplitude * s)
        return min(cands), max(cands)

    def integral(self, t: float) -> float:
        """int_0^t f(s) ds, closed form."""
        if self.kind == "constant":
            return self.value * t
        if self.kind == "linear":
            return self.value * t + 0.5 * self.slope * t * t
        om = 2.0 * math.pi * self.frequency
        if om == 0.0:
            return (self.value + self.amplitude * math.sin(self.phase)) * t
        return self.value * t + self.amplitude * (
            math.cos(self.phase) - math.cos(om * t + self.phase)) / om

    def integral_sq(self, t):
        """int_0^t f(s)^2 ds, closed form, vectorized in t."""
        t = np.asarray(t, dtype=np.float64)
        a = self.value
        if self.kind == "constant":
            out = a * a * t
        elif self.kind == "linear":
            b = self.slope
            out = a * a * t + a * b * t * t + b * b * t * t * t / 3.0
        else:
            b = self.amplitude
            om = 2.0 * math.pi * self.frequency
            ph = self.phase
            if om == 0.0:
                v = a + b * math.sin(ph)
                out = v * v * t
            else:
                cross = 2.0 * a * b * (np.cos(ph) - np.cos(om * t + ph)) / om
                sq = b * b * (0.5 * t - (np.sin(2.0 * (om * t + ph))
                                         - math.sin(2.0 * ph)) / (4.0 * om))
                out = a * a * t + cross + sq
        return out if out.shape else float(out)

    def inverse_integral_sq(self, u, hi: float):
        """Smallest t in [0, hi] with integral_sq(t) = u; f must stay nonzero.

        Bisection to machine precision; exact division for constants.
        """
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "constant":
            out = np.clip(u / (self.value * self.value), 0.0, hi)
            return out if out.shape else float(out)
        lo = np.zeros(u.shape if u.shape else (1,))
        hh = np.full_like(lo, hi)
        uu = np.atleast_1d(u)
        for _ in range(90):
            mid = 0.5 * (lo + hh)
            below = np.atleast_1d(self.integral_sq(mid)) < uu
            lo = np.where(below, mid, lo)
            hh = np.where(below, hh, mid)
        out = 0.5 * (lo + hh)
        return out.reshape(u.shape) if u.shape else float(out[0])


@dataclass(frozen=True)
class SizeLaw:
    """Jump size distribution."""

    kind: str
    value: float = 0.0
    low: float = 0.0
    high: float = 0.0
    mean: float = 0.0
    std: float = 0.0
    values: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if self.kind not in _SIZE_KINDS:
            raise ConfigError(
                f"SizeLaw kind {self.kind!r} not one of {_SIZE_KINDS}")
        if self.kind == "uniform" and not self.high > self.low:
            raise ConfigError("SizeLaw uniform: need high > low")
        if self.kind == "normal" and not self.std >= 0.0:
            raise ConfigError("SizeLaw normal: need std >= 0")
        if self.kind == "choice":
            if len(self.values) == 0:
                raise ConfigError("SizeLaw choice: values must be nonempty")
            if len(self.probs) not in (0, len(self.values)):
                raise ConfigError("SizeLaw choice: probs length mismatch")
            if len(self.probs) and abs(sum(self.probs) - 1.0) > 1e-12:
                raise ConfigError("SizeLaw choice: probs must sum to 1")

    @classmethod
    def constant(cls, value: float) -> "SizeLaw":
        return cls(kind="constant", value=float(value))

    @classmethod
    def uniform(cls, low: float, high: float) -> "SizeLaw":
        return cls(kind="uniform", low=float(low), high=float(high))

    @classmethod
    def normal(cls, mean: float, std: float) -> "SizeLaw":
        return cls(kind="normal", mean=float(mean), std=float(std))

    @classmethod
    def choice(cls, values, probs=()) -> "SizeLaw":
        return cls(kind="choice", values=tuple(float(v) for v in values),
                   probs=tuple(float(p) for p in probs))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, self.value)
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * rng.random(n)
        if self.kind == "normal":
            return self.mean + self.std * rng.standard_normal(n)
        p = np.asarray(self.probs) if self.probs else None
        idx = rng.choice(len(self.values), size=n, p=p)
        return np.asarray(self.values)[idx]


@dataclass(frozen=True)
class JumpSpec:
    """Jump component: none, Poisson with deterministic intensity, or a
    fixed list of (time, size) pairs."""

    kind: str
    intensity: TimeFunction | None = None
    size: SizeLaw | None = None
    times: tuple = ()
    sizes: tuple = ()

    def __post_init__(self):
        if self.kind not in _JUMP_KINDS:
            raise ConfigError(
                f"JumpSpec kind {self.kind!r} not one of {_JUMP_KINDS}")
        if self.kind == "poisson":
            if self.intensity is None or self.size is None:
                raise ConfigError("JumpSpec poisson: needs intensity and size")
        if self.kind == "fixed":
            if len(self.times) != len(self.sizes):
                raise ConfigError("JumpSpec fixed: times/sizes length mismatch")
            ts = self.times
            if any(not (t > 0.0 and math.isfinite(t)) for t in ts):
                raise ConfigError("JumpSpec fixed: times must be positive")
            if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
                raise ConfigError("JumpSpec fixed: times must increase strictly")
            if any(not math.isfinite(s) for s in self.sizes):
                raise ConfigError("JumpSpec fixed: sizes must be finite")

    @classmethod
    def none(cls) -> "JumpSpec":
        return cls(kind="none")

    @classmethod
    def poisson(cls, intensity: TimeFunction, size: SizeLaw) -> "JumpSpec":
        return cls(kind="poisson", intensity=intensity, size=size)

    @classmethod
    def fixed(cls, times, sizes) -> "JumpSpec":
        return cls(kind="fixed", times=tuple(float(t) for t in times),
                   sizes=tuple(float(s) for s in sizes))


@dataclass(frozen=True)
class ModelSpec:
    """Full model: drift a, volatility sigma, jumps, horizon, start value."""

    drift: TimeFunction
    vol: TimeFunction
    jumps: JumpSpec
    t_max: float
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.t_max) and self.t_max > 0.0):
            raise ConfigError("ModelSpec: t_max must be positive and finite")
        if not math.isfinite(self.x0):
            raise ConfigError("ModelSpec: x0 must be finite")
        s_lo, _ = self.vol.bounds(self.t_max)
        if not s_lo > 0.0:
            raise ConfigError("ModelSpec: volatility must stay positive")
        if self.jumps.kind == "fixed" and self.jumps.times:
            if self.jumps.times[-1] > self.t_max:
                raise ConfigError("ModelSpec: fixed jump beyond the horizon")
        if self.jumps.kind == "poisson":
            lam_lo, lam_hi = self.jumps.intensity.bounds(self.t_max)
            if lam_lo < 0.0:
                raise ConfigError("ModelSpec: jump intensity must be >= 0")
            if not math.isfinite(lam_hi):
                raise ConfigError("ModelSpec: jump intensity must be bounded")


def simulate_jumps(spec: ModelSpec, rng: np.random.Generator) -> list[JumpRecord]:
    """Draw the jump times and sizes; left limits are filled by the path
    simulators.

    Poisson jumps use thinning against the intensity supremum. Draw order:
    the count, then the time block, then the acceptance block, then the
    size block.
    """
    js = spec.jumps
    if js.kind == "none":
        return []
    if js.kind == "fixed":
        return [JumpRecord(p=p, time=t, size=s)
                for p, (t, s) in enumerate(zip(js.times, js.sizes))]
    lam_hi = js.intensity.bounds(spec.t_max)[1]
    if lam_hi == 0.0:
        return []
    n = int(rng.poisson(lam_hi * spec.t_max))
    if n == 0:
        return []
    times = np.sort(spec.t_max * rng.random(n))
    keep = rng.random(n) < np.asarray(js.intensity(times)) / lam_hi
    times = times[keep]
    sizes = js.size.draw(rng, times.shape[0])
    return [JumpRecord(p=p, time=float(t), size=float(s))
            for p, (t, s) in enumerate(zip(times, sizes))]


class _Emitter:
    """Accumulates (time, value, kind) samples as arrays."""

    def __init__(self):
        self._t = []
        self._v = []
        self._k = []

    def scalar(self, t, v, kind):
        self._t.append(np.array([t]))
        self._v.append(np.array([v]))
        self._k.append(np.array([kind], dtype=np.int8))

    def block(self, t, v, kind):
        if t.shape[0] == 0:
            return
        self._t.append(np.asarray(t, dtype=np.float64))
        self._v.append(np.asarray(v, dtype=np.float64))
        if np.isscalar(kind):
            self._k.append(np.full(t.shape[0], kind, dtype=np.int8))
        else:
            self._k.append(np.asarray(kind, dtype=np.int8))

    @property
    def last_time(self):
        return float(self._t[-1][-1]) if self._t else -math.inf

    def arrays(self):
        return (np.concatenate(self._t), np.concatenate(self._v),
                np.concatenate(self._k))


def simulate_exact(spec: ModelSpec, grid: GridScheme,
                   rng: np.random.Generator, *,
                   tables: limit_law.LimitLawTables | None = None) -> InternalPath:
    """Event-driven driftless simulation, exact in distribution.

    Requires a(.) identically zero; otherwise raises UnsupportedSchemeError
    (the euler-bridge scheme handles drift). In operational time the
    continuous part is standard Brownian motion, so on-grid stretches draw
    iid scaled cell-exit times and +/- sides in batches; at each jump time
    and at the horizon the position inside the current interval is drawn
    from the confined law at the elapsed age.

    Draw order per path: jump draws first (see simulate_jumps); then, in
    event order, per on-grid batch a time block followed by a side block;
    per off-center step one exit pair; one uniform per confined settle.
    """
    d_lo, d_hi = spec.drift.bounds(spec.t_max)
    if d_lo != 0.0 or d_hi != 0.0:
        raise UnsupportedSchemeError(
            "the exact scheme requires zero drift; use the euler-bridge scheme")
    if tables is None:
        tables = limit_law.get_tables()
    kb = backend.get_backend()
    eq = tables.exit_q
    w = grid.width
    snap = grid.snap
    w2 = w * w
    vol = spec.vol
    t_max = spec.t_max
    v_end = float(vol.integral_sq(t_max))
    vtol = 1e-14 * max(1.0, v_end)

    raw_jumps = simulate_jumps(spec, rng)
    events = [(float(vol.integral_sq(r.time)), r) for r in raw_jumps]
    events.append((v_end, None))

    em = _Emitter()
    em.scalar(0.0, spec.x0, KIND_STEP)
    jumps_out: list[JumpRecord] = []

    x = float(spec.x0)
    lo_k, hi_k = _cell_lines(x, w, snap)
    on_grid = (hi_k - lo_k) == 2
    k_c = (lo_k + hi_k) // 2
    if on_grid:
        x = k_c * w
    v = 0.0

    def settle(v_target):
        """Advance to v_target with no exit; returns the confined position."""
        nonlocal x, v
        age_op = v_target - v
        if age_op > vtol:
            if on_grid:
                y = float(limit_law.sample_confined_position(
                    age_op / w2, rng, tables=tables))
                x = k_c * w + w * y
            else:
                lo_v, hi_v = lo_k * w, hi_k * w
                half = min(x - lo_v, hi_v - x)
                y = float(limit_law.sample_confined_position(
                    age_op / (half * half), rng, tables=tables))
                x = x + half * y
        v = v_target
        return x

    def diffuse_until(v_event):
        """Run cell exits until v_event; leaves v just below it."""
        nonlocal x, v, lo_k, hi_k, on_grid, k_c
        while True:
            if on_grid:
                budget = (v_event - v) / w2
                if budget <= vtol / w2:
                    return
                m = int(min(max(64.0, budget * 1.25 + 32.0), _BATCH_CAP))
                u_t = rng.random(m)
                u_s = rng.random(m)
                uc = np.maximum(u_t, limit_law._U_FLOOR)
                xi = -np.log1p(-uc)
                mv = np.log(xi)
                cum = np.empty(m)
                n = kb.exit_scan(xi, mv, eq.vals, eq.slopes, eq.dm,
                                 eq.m_min, eq.m_cap, eq.tail_a, eq.tail_b,
                                 budget, cum)
                if n:
                    sides = np.where(u_s[:n] < 0.5, -1, 1)
                    ks = k_c + np.cumsum(sides)
                    v_exit = v + cum[:n] * w2
                    t_exit = vol.inverse_integral_sq(v_exit, t_max)
                    em.block(np.atleast_1d(t_exit), ks * w, KIND_EXIT)
                    k_c = int(ks[-1])
                    lo_k, hi_k = k_c - 1, k_c + 1
                    x = k_c * w
                    v = float(v_exit[-1])
                if n < m:
                    return
            else:
                lo_v, hi_v = lo_k * w, hi_k * w
                half = min(x - lo_v, hi_v - x)
                dt_op, side = limit_law.sample_exit(rng, c_half=half,
                                                    sigma=1.0, tables=tables)
                if v + dt_op > v_event:
                    return
                v = v + dt_op
                x_new = x + side * half
                hit = None
                if abs(x_new - lo_v) <= snap:
                    hit = lo_k
                elif abs(x_new - hi_v) <= snap:
                    hit = hi_k
                t_now = float(vol.inverse_integral_sq(v, t_max))
                if hit is None:
                    em.scalar(t_now, x_new, KIND_STEP)
                    x = x_new
                else:
                    x = hit * w
                    em.scalar(t_now, x, KIND_EXIT)
                    k_c = hit
                    lo_k, hi_k = k_c - 1, k_c + 1
                    on_grid = True

    for v_event, rec in events:
        diffuse_until(v_event)
        x_left = settle(v_event)
        if rec is None:
            if em.last_time < t_max:
                em.scalar(t_max, x_left, KIND_STEP)
            break
        x_after = x_left + rec.size
        em.scalar(rec.time, x_after, KIND_JUMP)
        jumps_out.append(replace(rec, left=x_left))
        lo_v, hi_v = lo_k * w, hi_k * w
        if x_after >= hi_v - snap or x_after <= lo_v + snap:
            # The jump is observed; the cell re-centers on the landing value.
            lo_k, hi_k = _cell_lines(x_after, w, snap)
            on_grid = (hi_k - lo_k) == 2
            if on_grid:
                k_c = (lo_k + hi_k) // 2
                x_after = k_c * w
        else:
            on_grid = False
        x = x_after

    tt, vv, kk = em.arrays()
    return InternalPath(times=tt, values=vv, kinds=kk, jumps=jumps_out,
                        scheme="exact", horizon=t_max, x0=spec.x0)


def _merged_knots(t_max, delta, specials):
    """Step grid refined with special times; grid knots within 1e-12*delta
    of a special are dropped in its favor."""
    n_grid = int(math.ceil(t_max / delta - 1e-9))
    base = np.arange(n_grid) * delta
    sp = np.asarray(sorted(set(specials) | {t_max}))
    if base.shape[0] > 1:
        keep = np.ones(base.shape[0], dtype=bool)
        for s in sp:
            keep[1:] &= np.abs(base[1:] - s) > 1e-12 * delta
        base = base[keep]
    return np.sort(np.concatenate((base, sp)))


def simulate_euler_bridge(spec: ModelSpec, grid: GridScheme,
                          delta: float | None,
                          rng: np.random.Generator) -> InternalPath:
    """Euler scheme with Brownian-bridge boundary corrections.

    Between consecutive knots the relevant cell boundaries are tested with
    the bridge touch probability exp(-2(b - X_k)(b - X_{k+1}) / (sigma^2 *
    delta)); straddled boundaries cross surely and the first crossing wins.
    Jump times and the horizon are knots, so jumps land exactly.

    delta defaults to (w^2 / (100 sup sigma^2)) * (inf sigma^2 / sup
    sigma^2) and must not exceed w^2 / (50 sup sigma^2).

    Draw order per path: jump draws first; then per chunk of 2^16 steps a
    normal block followed by a (steps, 2) uniform block.
    """
    w = grid.width
    snap = grid.snap
    t_max = spec.t_max
    s_lo, s_hi = spec.vol.bounds(t_max)
    if delta is None:
        delta = (w * w / (100.0 * s_hi * s_hi)) * (s_lo * s_lo) / (s_hi * s_hi)
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0.0):
        raise ConfigError("euler-bridge: delta must be positive and finite")
    if delta > w * w / (50.0 * s_hi * s_hi):
        raise ConfigError(
            "euler-bridge: delta exceeds w^2 / (50 sup sigma^2); "
            "refine the step or enlarge the cells")

    kb = backend.get_backend()
    raw_jumps = simulate_jumps(spec, rng)
    knots = _merged_knots(t_max, delta, [r.time for r in raw_jumps])
    n_steps = knots.shape[0] - 1
    dt = np.diff(knots)
    mu = np.asarray(spec.drift(knots[:-1]), dtype=np.float64) * dt
    sd = np.asarray(spec.vol(knots[:-1]), dtype=np.float64) * np.sqrt(dt)

    jump_size = np.zeros(n_steps)
    jump_flag = np.zeros(n_steps, dtype=np.int8)
    for r in raw_jumps:
        k = int(np.searchsorted(knots, r.time))
        jump_flag[k - 1] = 1
        jump_size[k - 1] = r.size

    em = _Emitter()
    em.scalar(0.0, spec.x0, KIND_STEP)
    x = float(spec.x0)
    lo_k, hi_k = _cell_lines(x, w, snap)
    left_vals: list[float] = []

    pos = 0
    while pos < n_steps:
        m = min(_CHUNK_STEPS, n_steps - pos)
        normals = rng.standard_normal(m)
        u2 = rng.random((m, 2))
        cap = 2 * m + 16
        while True:
            out_t = np.empty(cap)
            out_v = np.empty(cap)
            out_k = np.empty(cap, dtype=np.int8)
            out_jl = np.empty(max(16, int(np.sum(jump_flag[pos:pos + m])) + 1))
            ne, nj, x_end, lo_end, hi_end, status = kb.euler_cells(
                x, lo_k, hi_k, w, snap, knots[pos:pos + m + 1],
                mu[pos:pos + m], sd[pos:pos + m], normals, u2,
                jump_size[pos:pos + m], jump_flag[pos:pos + m],
                out_t, out_v, out_k, out_jl)
            if status == 0:
                break
            cap *= 2
        em.block(out_t[:ne], out_v[:ne], out_k[:ne])
        left_vals.extend(out_jl[:nj].tolist())
        x, lo_k, hi_k = float(x_end), int(lo_end), int(hi_end)
        pos += m

    jumps_out = [replace(r, left=left_vals[q])
                 for q, r in enumerate(raw_jumps)]
    tt, vv, kk = em.arrays()
    return InternalPath(times=tt, values=vv, kinds=kk, jumps=jumps_out,
                        scheme="euler-bridge", horizon=t_max, x0=spec.x0)


def euler_first_exit_times(n_paths: int, delta: float,
                           rng: np.random.Generator, *,
                           half_width: float = 1.0,
                           sigma: float = 1.0,
                           max_steps: int = 10_000_000) -> np.ndarray:
    """First exit times of Euler-bridge Brownian paths from a centered cell.

    Vectorized scheme cross-check: the same per-step bridge rules as the
    full simulator (straddle interpolation, touch Bernoulli with the
    deciding uniform reused as the time fraction, larger probability wins
    when both boundaries fire), run until every path has left
    (-half_width, half_width) from a standing start at the center.
    """
    h = float(half_width)
    s2d = sigma * sigma * delta
    sdt = sigma * math.sqrt(delta)
    x = np.zeros(n_paths)
    t_exit = np.full(n_paths, np.nan)
    alive = np.arange(n_paths)
    t = 0.0
    for _ in range(max_steps):
        if alive.shape[0] == 0:
            return t_exit
        xn = x + sdt * rng.standard_normal(alive.shape[0])
        u = rng.random((alive.shape[0], 2))
        pu = np.exp(np.minimum(-2.0 * (h - x) * (h - xn) / s2d, 0.0))
        pl = np.exp(np.minimum(-2.0 * (x + h) * (xn + h) / s2d, 0.0))
        up = xn >= h
        dn = xn <= -h
        fire_u = up | (u[:, 0] < pu)
        fire_l = dn | (u[:, 1] < pl)
        frac_u = np.where(up, (h - x) / np.where(xn != x, xn - x, 1.0),
                          u[:, 0] / np.maximum(pu, 1e-300))
        frac_l = np.where(dn, (-h - x) / np.where(xn != x, xn - x, 1.0),
                          u[:, 1] / np.maximum(pl, 1e-300))
        both = fire_u & fire_l
        fire_u = fire_u & (~both | (pu >= pl))
        fire_l = fire_l & ~fire_u
        frac = np.where(fire_u, frac_u, frac_l)
        hit = fire_u | fire_l
        if np.any(hit):
            f = np.clip(frac[hit], 1e-9, 1.0 - 1e-9)
            t_exit[alive[hit]] = t + f * delta
            keep = ~hit
            x = xn[keep]
            alive = alive[keep]
        else:
            x = xn
        t += delta
    raise RuntimeError("euler_first_exit_times: step cap exceeded")
