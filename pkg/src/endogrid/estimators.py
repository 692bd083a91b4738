"""Realized variance, quadratic variation, and the standardized statistic.

The object under study is the scaled estimation error of realized variance
computed at the grid observation times,

    Z = (RV - QV) / eps,

whose small-cell limit is Gaussian with variance (2/3) c^2 * int sigma^2
plus an independent 2 * jump * c * eta term per jump. The truth side QV
uses the closed-form integral of sigma^2 (all volatility shapes here have
one), so the comparison carries no quadrature noise.

``equidistant_rv`` is the deterministic-sampling baseline: realized
variance over X_{j/n}, standardized by sqrt(n), whose limit variance for
the continuous part is the classical 2 * int sigma^4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .path_sim import ModelSpec
from .scheme import GridScheme, InternalPath, JumpRecord, SampledPath

__all__ = [
    "QVDecomposition",
    "StandardizedStat",
    "realized_variance",
    "quadratic_variation",
    "standardized_stat",
    "equidistant_rv",
]


@dataclass(frozen=True)
class QVDecomposition:
    """Quadratic variation split into its continuous and jump parts."""

    continuous: float
    jump: float

    @property
    def total(self) -> float:
        return self.continuous + self.jump


@dataclass(frozen=True)
class StandardizedStat:
    """Scaled realized-variance error (RV - QV)/eps at a horizon.

    ``boundary`` is the scaled quadratic variation of the unobserved stub
    (tau^-(t), t]; its mean over replications is O(eps).
    """

    value: float
    horizon: float
    grid: GridScheme
    boundary: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("StandardizedStat: value must be finite")


def realized_variance(sampled: SampledPath, t: float) -> float:
    """Sum of squared observation increments over (0, t]."""
    times = sampled.times
    values = sampled.values
    n = int(np.searchsorted(times, t, side="right"))
    if n < 2:
        return 0.0
    d = np.diff(values[:n])
    return float(d @ d)


def quadratic_variation(spec: ModelSpec, jumps: list[JumpRecord],
                        t: float) -> QVDecomposition:
    """QV at t: closed-form int_0^t sigma^2 plus squared jump sizes."""
    cont = float(spec.vol.integral_sq(t))
    jump = math.fsum(r.size * r.size for r in jumps if r.time <= t)
    return QVDecomposition(continuous=cont, jump=jump)


def standardized_stat(sampled: SampledPath, spec: ModelSpec,
                      jumps: list[JumpRecord], t: float,
                      grid: GridScheme) -> StandardizedStat:
    """Z = (RV - QV_total)/eps, with the boundary stub reported alongside."""
    rv = realized_variance(sampled, t)
    qv = quadratic_variation(spec, jumps, t)
    j = int(np.searchsorted(sampled.times, t, side="right")) - 1
    tau_last = float(sampled.times[max(j, 0)])
    stub = qv.total - quadratic_variation(spec, jumps, tau_last).total
    return StandardizedStat(value=(rv - qv.total) / grid.eps, horizon=t,
                            grid=grid, boundary=stub / grid.eps)


def equidistant_rv(path: InternalPath, n: int, t: float,
                   spec: ModelSpec) -> tuple[float, float]:
    """Deterministic-time baseline: RV over X_{j/n} and sqrt(n)(RV - QV).

    The path must carry samples essentially at the j/n times (within 5% of
    the spacing); a coarser path cannot support the comparison and raises.
    """
    if n < 1:
        raise ConfigError("equidistant_rv: n must be at least 1")
    m = int(math.floor(n * t + 1e-9))
    targets = np.arange(m + 1) / n
    idx = np.searchsorted(path.times, targets + 1e-12 / n, side="right") - 1
    if idx[0] < 0:
        raise ConfigError("equidistant_rv: path starts after time 0")
    stale = targets - path.times[idx]
    if float(np.max(stale)) > 0.05 / n:
        raise ConfigError(
            "equidistant_rv: path resolution too coarse for the given n")
    vals = path.values[idx]
    d = np.diff(vals)
    rv = float(d @ d)
    qv = quadratic_variation(spec, path.jumps, m / n).total
    return rv, math.sqrt(n) * (rv - qv)
