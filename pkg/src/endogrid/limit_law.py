"""Limit laws of the grid-exit observation scheme.

Everything here concerns standard Brownian motion started at the centre of
the interval (-1, 1) and killed at the walls; all quantities for a cell of
half-width ``a`` and volatility ``sigma`` follow by the diffusive rescaling
``time -> time * a^2 / sigma^2``, ``position -> a * position``.

Four closed-form objects are evaluated to a requested absolute tolerance:

* the confined (killed) transition kernel, as an image-charge series for
  small times and a sine-eigenfunction series for large times;
* the first-exit-time CDF F, with the matching dual representation;
* the stationary renewal-age CDF G, the normalized integral of 1 - F;
* the overshoot density h, defined as the time integral of the confined
  kernel and evaluated by adaptive quadrature (the candidate closed form
  1 - |y| is only adopted for sampling once it passes the equivalence gate
  against the quadrature value).

Samplers are inverse-CDF on monotone cubic quantile tables built once per
tolerance by ``get_tables``; after that build every evaluation is pure, so
any number of workers may share the tables. Each sampler consumes uniforms
from the caller's generator in whole blocks (documented per function) so
that draws are reproducible for a given seed regardless of backend.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec, trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.special import erfc, ndtr, ndtri

__all__ = [
    "Z_SWITCH",
    "eval_h",
    "eval_h_closed",
    "exit_time_cdf",
    "exit_time_survival",
    "renewal_age_cdf",
    "confined_kernel",
    "sample_eta",
    "sample_exit",
    "sample_renewal_age",
    "sample_confined_position",
    "LimitLawTables",
    "get_tables",
    "EtaDistribution",
    "ExitTimeDistribution",
    "RenewalAgeDistribution",
    "ConfinedKernel",
]

# Dimensionless switch between the image-charge and spectral series.
Z_SWITCH = 1.0

# Smallest uniform admitted into inverse transforms: rng.random() can return
# exactly 0.0, which the log transforms cannot take.
_U_FLOOR = 1.1102230246251565e-16  # 2^-53

_LAM0 = math.pi * math.pi / 8.0    # ground-state decay rate
_MAX_IMAGES = 64
_MAX_MODES = 64

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)

# Confined-position sampler branches (dimensionless time).
_CONF_Z_LO = 0.01   # below: exit probability < 1e-22, free Gaussian
_CONF_Z_HI = 6.0    # above: ground-state profile to ~1e-10
_CONF_NZ = 257
_N_U = 4097


def _prepare(x):
    a = np.asarray(x, dtype=np.float64)
    return a, a.ndim == 0


def _ret(a, scalar):
    return np.asarray(a).item() if scalar else a


# ---------------------------------------------------------------------------
# Series evaluations


def _kernel_image(z, y, tol):
    """Image-charge series for the killed kernel, z and y broadcast arrays."""
    pref = 1.0 / np.sqrt(2.0 * math.pi * z)
    inv2z = 0.5 / z
    tot = np.exp(-y * y * inv2z) - np.exp(-(y + 2.0) ** 2 * inv2z)
    for m in range(1, _MAX_IMAGES + 1):
        fm = 4.0 * m
        add = (np.exp(-(y - fm) ** 2 * inv2z) - np.exp(-(y + 2.0 + fm) ** 2 * inv2z)
               + np.exp(-(y + fm) ** 2 * inv2z) - np.exp(-(y + 2.0 - fm) ** 2 * inv2z))
        tot += add
        # Alternating, Gaussian-decaying images: first small term bounds the rest.
        if np.max(np.abs(add) * pref) < 0.25 * tol:
            break
    return pref * tot


def _kernel_spectral(z, y, tol):
    """Sine-eigenfunction series for the killed kernel (large z)."""
    tot = np.zeros(np.broadcast(z, y).shape)
    for j in range(_MAX_MODES):
        q = 2 * j + 1
        term = np.exp(-q * q * _LAM0 * z) * np.cos(0.5 * math.pi * q * y)
        tot += term
        if np.max(np.exp(-q * q * _LAM0 * np.min(z))) < 0.25 * tol:
            break
    return tot


def confined_kernel(z, y, tol=1e-8):
    """Sub-density of killed Brownian motion at position y after time z.

    Dimensionless scaling: start at 0, absorbing walls at -1 and +1. The
    value integrates over y to the survival probability, not to one.
    """
    za, zs = _prepare(z)
    ya, ys = _prepare(y)
    if not np.all(np.isfinite(za)) or not np.all(np.isfinite(ya)):
        raise ValueError("confined_kernel: arguments must be finite")
    if np.any(za <= 0.0):
        raise ValueError("confined_kernel: elapsed time must be positive")
    if tol <= 0.0:
        raise ValueError("confined_kernel: tol must be positive")
    za, ya = np.broadcast_arrays(za, ya)
    out = np.zeros(za.shape)
    inside = np.abs(ya) < 1.0
    small = inside & (za <= Z_SWITCH)
    large = inside & (za > Z_SWITCH)
    if small.any():
        out[small] = _kernel_image(za[small], ya[small], tol)
    if large.any():
        out[large] = _kernel_spectral(za[large], ya[large], tol)
    np.maximum(out, 0.0, out=out)
    return _ret(out, zs and ys)


def _survival_unit(z, tol=1e-10):
    """P(no exit from (-1,1) by time z), dimensionless; returns a 1-d+ array."""
    za = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = np.empty(za.shape)
    pos = za > 0.0
    out[~pos] = 1.0
    small = pos & (za <= Z_SWITCH)
    large = pos & (za > Z_SWITCH)
    if small.any():
        zs = za[small]
        acc = np.zeros(zs.shape)
        for k in range(_MAX_IMAGES):
            term = 2.0 * erfc((2 * k + 1) / np.sqrt(2.0 * zs))
            acc += term if k % 2 == 0 else -term
            if np.max(term) < 0.25 * tol:
                break
        out[small] = 1.0 - acc
    if large.any():
        zl = za[large]
        acc = np.zeros(zl.shape)
        for j in range(_MAX_MODES):
            q = 2 * j + 1
            term = (4.0 / math.pi) * np.exp(-q * q * _LAM0 * zl) / q
            acc += term if j % 2 == 0 else -term
            if np.max(term) < 0.25 * tol:
                break
        out[large] = acc
    return np.clip(out, 0.0, 1.0)


def exit_time_cdf(z, c_half=1.0, sigma=1.0, tol=1e-8):
    """CDF of the first exit time from (-c_half, c_half), started centred.

    ``z`` is in time units; ``c_half`` in price units; ``sigma`` is the
    (constant) volatility. Scaling: F(z) = F_unit(z * sigma^2 / c_half^2).
    """
    if c_half <= 0.0 or sigma <= 0.0:
        raise ValueError("exit_time_cdf: c_half and sigma must be positive")
    za, zs = _prepare(z)
    if np.any(np.isnan(za)) or np.any(za < 0.0):
        raise ValueError("exit_time_cdf: time must be nonnegative")
    zeta = za * (sigma * sigma) / (c_half * c_half)
    return _ret(1.0 - _survival_unit(zeta, tol), zs)


def exit_time_survival(z, c_half=1.0, sigma=1.0, tol=1e-8):
    """1 - exit_time_cdf, computed directly for tail accuracy."""
    if c_half <= 0.0 or sigma <= 0.0:
        raise ValueError("exit_time_survival: c_half and sigma must be positive")
    za, zs = _prepare(z)
    if np.any(np.isnan(za)) or np.any(za < 0.0):
        raise ValueError("exit_time_survival: time must be nonnegative")
    zeta = za * (sigma * sigma) / (c_half * c_half)
    return _ret(_survival_unit(zeta, tol), zs)


def renewal_age_cdf(z, c_half=1.0, sigma=1.0, tol=1e-8):
    """Stationary age CDF G(z) = (sigma^2/c_half^2) * int_0^z (1-F).

    Evaluated by Gauss-Legendre panels over the survival function, sharing
    one vectorized survival call across all query points; the mean exit time
    c_half^2/sigma^2 is what normalizes G to 1 at infinity.
    """
    if c_half <= 0.0 or sigma <= 0.0:
        raise ValueError("renewal_age_cdf: c_half and sigma must be positive")
    za, zs = _prepare(z)
    if np.any(np.isnan(za)) or np.any(za < 0.0):
        raise ValueError("renewal_age_cdf: time must be nonnegative")
    zeta = np.atleast_1d(za * (sigma * sigma) / (c_half * c_half)).ravel()
    # Beyond this the remaining mass is below double precision.
    full = 45.0
    zc = np.minimum(zeta, full)
    knots = np.unique(np.concatenate(([0.0], zc)))
    gaps = np.diff(knots)
    if gaps.size:
        # Panels no longer than 0.1 keep the 10-point rule far below tol.
        n_sub = np.maximum(1, np.ceil(gaps / 0.1)).astype(np.int64)
        widths = np.repeat(gaps / n_sub, n_sub)
        offs = np.arange(int(n_sub.sum())) - np.repeat(
            np.cumsum(n_sub) - n_sub, n_sub)
        lo = np.repeat(knots[:-1], n_sub) + widths * offs
        half = 0.5 * widths
        nodes = (lo + half)[:, None] + half[:, None] * _GL_X[None, :]
        surv = _survival_unit(nodes.ravel(), min(0.25 * tol, 1e-12))
        panel = half * (surv.reshape(nodes.shape) @ _GL_W)
        cum = np.cumsum(panel)
        g_knots = np.concatenate(([0.0], cum[np.cumsum(n_sub) - 1]))
    else:
        g_knots = np.zeros(1)
    out = np.minimum(g_knots[np.searchsorted(knots, zc)], 1.0)
    out = out if not zs else out[0]
    return _ret(np.asarray(out), zs)


def eval_h(y, tol=1e-8):
    """Overshoot density h(y): the time integral of the confined kernel.

    Evaluated by adaptive quadrature, split at the series switch point; the
    small-time piece is integrated in s = sqrt(z) to tame the endpoint.
    Returns 0 outside [-1, 1].
    """
    ya, _ = _prepare(y)
    if not np.all(np.isfinite(ya)):
        raise ValueError("eval_h: position must be finite")
    if tol <= 0.0:
        raise ValueError("eval_h: tol must be positive")
    flat = np.atleast_1d(ya).ravel()
    inner = np.abs(flat) < 1.0
    out = np.zeros(flat.shape)
    if inner.any():
        yi = flat[inner]
        stol = 0.25 * tol

        def small_piece(s):
            return 2.0 * s * _kernel_image(np.asarray(s * s), yi, stol)

        def large_piece(zv):
            return _kernel_spectral(np.asarray(zv), yi, stol)

        v1, _ = quad_vec(small_piece, 0.0, math.sqrt(Z_SWITCH),
                         epsabs=0.25 * tol, epsrel=1e-12, norm="max")
        v2, _ = quad_vec(large_piece, Z_SWITCH, np.inf,
                         epsabs=0.25 * tol, epsrel=1e-12, norm="max")
        out[inner] = v1 + v2
    res = out.reshape(np.atleast_1d(ya).shape)
    if ya.ndim == 0:
        return float(res[0])
    return res


def eval_h_closed(y):
    """Closed-form candidate for h: the triangular density 1 - |y|."""
    ya, ys = _prepare(y)
    return _ret(np.maximum(0.0, 1.0 - np.abs(ya)), ys)


# ---------------------------------------------------------------------------
# Quantile tables


@dataclass(frozen=True)
class _LogQuantile:
    """Quantile table on a uniform grid in m = log(-log(1-u)).

    The transform makes both ends smooth: near u=0 the quantile varies like
    1/log(1/u), which is analytic in m; near u=1 it is asymptotically linear
    in xi = -log(1-u), handled past ``m_cap`` by the exact one-term tail
    ``tail_a*xi + tail_b``.
    """

    m_min: float
    m_cap: float
    dm: float
    vals: np.ndarray
    slopes: np.ndarray
    tail_a: float
    tail_b: float

    def __call__(self, u):
        uc = np.maximum(np.asarray(u, dtype=np.float64), _U_FLOOR)
        xi = -np.log1p(-uc)
        mv = np.log(xi)
        out = _hermite(self.m_min, self.dm, self.vals, self.slopes, mv)
        tail = mv >= self.m_cap
        if tail.any():
            out[tail] = self.tail_a * xi[tail] + self.tail_b
        return out


def _hermite(x0, dx, vals, slopes, q):
    pos = (np.asarray(q) - x0) / dx
    j = pos.astype(np.int64)
    np.clip(j, 0, vals.shape[0] - 2, out=j)
    t = pos - j
    t2 = t * t
    t3 = t2 * t
    return (vals[j] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + slopes[j] * dx * (t3 - 2.0 * t2 + t)
            + vals[j + 1] * (-2.0 * t3 + 3.0 * t2)
            + slopes[j + 1] * dx * (t3 - t2))


def _bisect_monotone(fn, targets, lo, hi, iters=90):
    """Vectorized bisection for a nondecreasing scalar-field function."""
    t = np.asarray(targets, dtype=np.float64)
    a = np.full(t.shape, lo)
    b = np.full(t.shape, hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        below = fn(mid) < t
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def _build_log_quantile(cdf_unit, tail_b_log, hi_bracket):
    m_min = -53.0 * math.log(2.0)
    m_cap = math.log(12.0 * math.log(2.0))
    n = _N_U
    m_knots = np.linspace(m_min, m_cap, n)
    xi = np.exp(m_knots)
    u = -np.expm1(-xi)
    q = _bisect_monotone(cdf_unit, u, 0.0, hi_bracket)
    q = np.maximum.accumulate(q)
    slopes = PchipInterpolator(m_knots, q).derivative()(m_knots)
    tail_a = 8.0 / (math.pi * math.pi)
    return _LogQuantile(m_min=m_min, m_cap=m_cap, dm=(m_cap - m_min) / (n - 1),
                        vals=q, slopes=slopes,
                        tail_a=tail_a, tail_b=tail_a * tail_b_log)


def _age_cdf_dense():
    """Gauss-Legendre cumulative of the unit survival on a dense grid."""
    z_hi = 30.0
    panels = 24000
    edges = np.linspace(0.0, z_hi, panels + 1)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    half = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[:-1] + edges[1:])
    pts = (mids[:, None] + half * nodes[None, :]).ravel()
    vals = _survival_unit(pts, 1e-12).reshape(panels, 8)
    inc = half * (vals * weights[None, :]).sum(axis=1)
    g = np.concatenate(([0.0], np.cumsum(inc)))
    return edges, np.clip(g, 0.0, 1.0)


@dataclass(frozen=True)
class _ConfinedTable:
    """Per-row quantile tables of the confined position, rows log-spaced in z."""

    ln_lo: float
    dln: float
    du: float
    q: np.ndarray        # (nz, nu) quantile values
    d: np.ndarray        # (nz, nu) pchip slopes in u

    def _row_eval(self, i, u):
        nu = self.q.shape[1]
        pos = u / self.du
        j = pos.astype(np.int64)
        np.clip(j, 0, nu - 2, out=j)
        t = pos - j
        t2 = t * t
        t3 = t2 * t
        v = (self.q[i, j] * (2.0 * t3 - 3.0 * t2 + 1.0)
             + self.d[i, j] * self.du * (t3 - 2.0 * t2 + t)
             + self.q[i, j + 1] * (-2.0 * t3 + 3.0 * t2)
             + self.d[i, j + 1] * (t3 - t2) * self.du)
        # The density vanishes linearly at the walls, so the first and last
        # u-panels invert the local quadratic CDF instead of the cubic.
        low = u < self.du
        if low.any():
            edge = self.q[i[low], 1]
            v[low] = -1.0 + (edge + 1.0) * np.sqrt(u[low] / self.du)
        highm = u > 1.0 - self.du
        if highm.any():
            edge = self.q[i[highm], nu - 2]
            v[highm] = 1.0 - (1.0 - edge) * np.sqrt((1.0 - u[highm]) / self.du)
        return v

    def __call__(self, z, u):
        r = (np.log(z) - self.ln_lo) / self.dln
        i = np.clip(r.astype(np.int64), 0, self.q.shape[0] - 2)
        t = np.clip(r - i, 0.0, 1.0)
        v0 = self._row_eval(i, u)
        v1 = self._row_eval(i + 1, u)
        return (1.0 - t) * v0 + t * v1


def _confined_cdf_grid(z, y):
    """Sub-probability CDF of the confined kernel along a y grid (one z)."""
    sz = math.sqrt(z)
    if z <= Z_SWITCH:
        tot = np.zeros(y.shape)
        m_span = int(math.ceil((6.0 * sz + 1.0) / 4.0)) + 1
        for m in range(-m_span, m_span + 1):
            fm = 4.0 * m
            tot += ndtr((y - fm) / sz) - ndtr((-1.0 - fm) / sz)
            tot -= ndtr((y + 2.0 + fm) / sz) - ndtr((1.0 + fm) / sz)
        return tot
    tot = np.zeros(y.shape)
    for j in range(_MAX_MODES):
        q = 2 * j + 1
        amp = np.exp(-q * q * _LAM0 * z) * 2.0 / (q * math.pi)
        sgn = 1.0 if j % 2 == 0 else -1.0
        tot += amp * (np.sin(0.5 * math.pi * q * y) + sgn)
        if amp < 1e-15:
            break
    return tot


def _build_confined_table():
    nz = _CONF_NZ
    nu = _N_U
    z_knots = np.geomspace(_CONF_Z_LO, _CONF_Z_HI, nz)
    u_grid = np.linspace(0.0, 1.0, nu)
    y_fine = np.linspace(-1.0, 1.0, 8193)
    qrows = np.empty((nz, nu))
    drows = np.empty((nz, nu))
    for i, z in enumerate(z_knots):
        c = _confined_cdf_grid(z, y_fine)
        c = np.maximum.accumulate(np.clip(c, 0.0, None))
        cond = c / c[-1]
        keep = np.concatenate(([True], np.diff(cond) > 0.0))
        ck = cond[keep]
        yk = y_fine[keep]
        row = np.interp(u_grid, ck, yk)
        row[0] = -1.0
        row[-1] = 1.0
        row = np.maximum.accumulate(row)
        qrows[i] = row
        drows[i] = PchipInterpolator(u_grid, row).derivative()(u_grid)
    return _ConfinedTable(ln_lo=math.log(_CONF_Z_LO),
                          dln=math.log(_CONF_Z_HI / _CONF_Z_LO) / (nz - 1),
                          du=1.0 / (nu - 1), q=qrows, d=drows)


@dataclass(frozen=True)
class _EtaTable:
    """Fallback inverse-CDF table for the overshoot law (gate failed)."""

    du: float
    q: np.ndarray
    d: np.ndarray

    def __call__(self, u):
        v = _hermite(0.0, self.du, self.q, self.d, u)
        low = u < self.du
        if low.any():
            v[low] = -1.0 + (self.q[1] + 1.0) * np.sqrt(u[low] / self.du)
        high = u > 1.0 - self.du
        if high.any():
            v[high] = 1.0 - (1.0 - self.q[-2]) * np.sqrt((1.0 - u[high]) / self.du)
        return v


@dataclass(frozen=True)
class LimitLawTables:
    """One-time tabulations shared by every sampler; pure after build.

    ``h_closed_ok`` records whether the closed-form overshoot density passed
    its equivalence gate against the quadrature evaluation; when it did, the
    overshoot sampler inverts the triangular CDF analytically and the
    fallback table is still built (and tested) but unused.
    """

    tol: float
    exit_q: _LogQuantile
    age_q: _LogQuantile
    confined: _ConfinedTable
    h_grid: np.ndarray
    h_vals: np.ndarray
    h_cdf: np.ndarray
    h_closed_ok: bool
    h_max_dev: float
    eta_q: _EtaTable
    eta_variance: float

    @classmethod
    def build(cls, tol=1e-8):
        if tol <= 0.0:
            raise ValueError("LimitLawTables: tol must be positive")
        exit_q = _build_log_quantile(lambda zz: 1.0 - _survival_unit(zz, 1e-13),
                                     math.log(4.0 / math.pi), 60.0)
        edges, gdense = _age_cdf_dense()
        age_q = _build_log_quantile(lambda zz: np.interp(zz, edges, gdense),
                                    math.log(32.0 / math.pi ** 3), 30.0)
        confined = _build_confined_table()

        h_grid = np.linspace(-1.0, 1.0, _N_U)
        h_vals = np.asarray(eval_h(h_grid, tol))
        h_dev = float(np.max(np.abs(h_vals - eval_h_closed(h_grid))))
        h_ok = h_dev <= 10.0 * tol

        cdf = np.concatenate(([0.0], np.cumsum(
            0.5 * (h_vals[1:] + h_vals[:-1]) * np.diff(h_grid))))
        cdf /= cdf[-1]
        cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
        cdf[0] = 0.0
        cdf[-1] = 1.0

        u_grid = np.linspace(0.0, 1.0, _N_U)
        keep2 = np.concatenate(([True], np.diff(cdf) > 0.0))
        qe = np.interp(u_grid, cdf[keep2], h_grid[keep2])
        qe[0] = -1.0
        qe[-1] = 1.0
        qe = np.maximum.accumulate(qe)
        eta_q = _EtaTable(du=1.0 / (_N_U - 1), q=qe,
                          d=PchipInterpolator(u_grid, qe).derivative()(u_grid))
        var = float(trapezoid(h_grid * h_grid * h_vals, h_grid)
                    / trapezoid(h_vals, h_grid))
        return cls(tol=tol, exit_q=exit_q, age_q=age_q, confined=confined,
                   h_grid=h_grid, h_vals=h_vals, h_cdf=cdf,
                   h_closed_ok=h_ok, h_max_dev=h_dev,
                   eta_q=eta_q, eta_variance=var)


_cache: dict[float, LimitLawTables] = {}
_cache_lock = threading.Lock()


def get_tables(tol=1e-8) -> LimitLawTables:
    """Build-once accessor for the sampler tables at a given tolerance."""
    with _cache_lock:
        tb = _cache.get(tol)
    if tb is not None:
        return tb
    tb = LimitLawTables.build(tol)
    with _cache_lock:
        _cache.setdefault(tol, tb)
        tb = _cache[tol]
    return tb


# ---------------------------------------------------------------------------
# Samplers (inverse transform; one uniform block per call unless stated)


def _draw_block(rng, n):
    u = rng.random(1 if n is None else int(n))
    return np.maximum(u, _U_FLOOR)


def sample_eta(rng, n=None, tables=None):
    """Draws from the overshoot density h on (-1, 1). One uniform per draw."""
    tb = tables if tables is not None else get_tables()
    u = _draw_block(rng, n)
    if tb.h_closed_ok:
        out = np.where(u < 0.5, -1.0 + np.sqrt(2.0 * u),
                       1.0 - np.sqrt(2.0 * (1.0 - u)))
    else:
        out = tb.eta_q(u)
    return float(out[0]) if n is None else out


def sample_exit(rng, c_half=1.0, sigma=1.0, n=None, tables=None):
    """Exit time and side from a centred cell of half-width c_half.

    Consumes two uniform blocks: one for times, one for sides. The side is
    equiprobable and independent of the time (symmetric, driftless).
    """
    if c_half <= 0.0 or sigma <= 0.0:
        raise ValueError("sample_exit: c_half and sigma must be positive")
    tb = tables if tables is not None else get_tables()
    u_t = _draw_block(rng, n)
    u_s = rng.random(1 if n is None else int(n))
    times = tb.exit_q(u_t) * (c_half * c_half) / (sigma * sigma)
    sides = np.where(u_s < 0.5, -1, 1).astype(np.int64)
    if n is None:
        return float(times[0]), int(sides[0])
    return times, sides


def sample_renewal_age(rng, c_half=1.0, sigma=1.0, n=None, tables=None):
    """Draws from the stationary age law G. One uniform per draw."""
    if c_half <= 0.0 or sigma <= 0.0:
        raise ValueError("sample_renewal_age: c_half and sigma must be positive")
    tb = tables if tables is not None else get_tables()
    u = _draw_block(rng, n)
    ages = tb.age_q(u) * (c_half * c_half) / (sigma * sigma)
    return float(ages[0]) if n is None else ages


def sample_confined_position(z, rng, n=None, tables=None):
    """Position of the confined motion after dimensionless time z.

    The law is the confined kernel normalized by the survival probability.
    One uniform per draw; ``z`` may be a scalar or an array matching ``n``.
    Three branches: free Gaussian below z=0.01 (exit probability < 1e-22),
    tabulated inverse CDF on [0.01, 6], ground-state arcsine law above.
    """
    tb = tables if tables is not None else get_tables()
    za = np.asarray(z, dtype=np.float64)
    if np.any(~np.isfinite(za)) or np.any(za <= 0.0):
        raise ValueError("sample_confined_position: time must be positive and finite")
    u = _draw_block(rng, n)
    np.minimum(u, 1.0 - _U_FLOOR, out=u)
    zb = np.broadcast_to(za, u.shape).astype(np.float64, copy=True)
    out = np.empty(u.shape)
    lo = zb < _CONF_Z_LO
    hi = zb > _CONF_Z_HI
    mid = ~(lo | hi)
    if lo.any():
        out[lo] = np.sqrt(zb[lo]) * ndtri(u[lo])
    if hi.any():
        out[hi] = (2.0 / math.pi) * np.arcsin(2.0 * u[hi] - 1.0)
    if mid.any():
        out[mid] = tb.confined(zb[mid], u[mid])
    np.clip(out, -1.0 + 1e-15, 1.0 - 1e-15, out=out)
    return float(out[0]) if n is None else out


# ---------------------------------------------------------------------------
# Distribution facades


@dataclass(frozen=True)
class EtaDistribution:
    """Overshoot law: density h, its tabulated CDF, and a sampler."""

    tol: float = 1e-8
    tables: LimitLawTables = field(default=None, repr=False)

    def _tb(self):
        return self.tables if self.tables is not None else get_tables(self.tol)

    @property
    def grid(self):
        return self._tb().h_grid

    @property
    def cdf_values(self):
        return self._tb().h_cdf

    def density(self, y):
        tb = self._tb()
        if tb.h_closed_ok:
            return eval_h_closed(y)
        return eval_h(y, self.tol)

    def cdf(self, y):
        tb = self._tb()
        y, scalar = _prepare(y)
        if tb.h_closed_ok:
            yc = np.clip(y, -1.0, 1.0)
            out = np.where(yc < 0.0, 0.5 * (1.0 + yc) ** 2,
                           1.0 - 0.5 * (1.0 - yc) ** 2)
        else:
            out = np.interp(y, tb.h_grid, tb.h_cdf)
        return _ret(out, scalar)

    def variance(self):
        return self._tb().eta_variance

    def sample(self, rng, n=None):
        return sample_eta(rng, n=n, tables=self._tb())


@dataclass(frozen=True)
class ExitTimeDistribution:
    """First-exit-time law for a centred cell of half-width c_half."""

    c_half: float = 1.0
    sigma: float = 1.0
    tol: float = 1e-8
    tables: LimitLawTables = field(default=None, repr=False)

    def __post_init__(self):
        if self.c_half <= 0.0 or self.sigma <= 0.0:
            raise ValueError("ExitTimeDistribution: c_half and sigma must be positive")

    def _tb(self):
        return self.tables if self.tables is not None else get_tables(self.tol)

    def cdf(self, z):
        return exit_time_cdf(z, self.c_half, self.sigma, self.tol)

    def survival(self, z):
        return exit_time_survival(z, self.c_half, self.sigma, self.tol)

    def mean(self):
        return self.c_half * self.c_half / (self.sigma * self.sigma)

    def tabulation(self):
        """(z, F(z)) knots, monotone by construction."""
        tb = self._tb()
        scale = self.mean()
        xi = np.exp(np.linspace(tb.exit_q.m_min, tb.exit_q.m_cap, tb.exit_q.vals.shape[0]))
        return tb.exit_q.vals * scale, -np.expm1(-xi)

    def sample(self, rng, n=None):
        return sample_exit(rng, self.c_half, self.sigma, n=n, tables=self._tb())


@dataclass(frozen=True)
class RenewalAgeDistribution:
    """Stationary age law G of the cell-exit renewal process."""

    exit_law: ExitTimeDistribution = field(default_factory=ExitTimeDistribution)

    def cdf(self, z):
        return renewal_age_cdf(z, self.exit_law.c_half, self.exit_law.sigma,
                               self.exit_law.tol)

    def tabulation(self):
        tb = self.exit_law._tb()
        scale = self.exit_law.mean()
        xi = np.exp(np.linspace(tb.age_q.m_min, tb.age_q.m_cap, tb.age_q.vals.shape[0]))
        return tb.age_q.vals * scale, -np.expm1(-xi)

    def sample(self, rng, n=None):
        return sample_renewal_age(rng, self.exit_law.c_half,
                                  self.exit_law.sigma, n=n,
                                  tables=self.exit_law._tb())


@dataclass(frozen=True)
class ConfinedKernel:
    """Killed-Brownian kernel on (-1,1) with its dual-series switch point."""

    z_switch: float = Z_SWITCH
    tol: float = 1e-8
    tables: LimitLawTables = field(default=None, repr=False)

    def _tb(self):
        return self.tables if self.tables is not None else get_tables(self.tol)

    def value(self, z, y):
        return confined_kernel(z, y, self.tol)

    def survival(self, z):
        return exit_time_survival(z, tol=self.tol)

    def sample(self, z, rng, n=None):
        return sample_confined_position(z, rng, n=n, tables=self._tb())
