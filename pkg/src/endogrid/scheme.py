"""The grid observation scheme and its path containers.

The price axis carries the regular grid {k*c*eps}. A path restarts, after
each observation, in the cell attached to the observed value y:

* y on a grid line: the symmetric double cell [y - c*eps, y + c*eps];
* y strictly between lines: the single enclosing cell.

The next observation happens when the path first leaves that cell; first
boundary contact counts as leaving (for continuous paths the two agree
almost surely). Grid membership is decided by snapping within a relative
tolerance of 1e-12 cell widths, far below any scale in the experiments.

``extract_observations`` replays a simulated path through this automaton;
``overshoot_at`` computes the scaled distance of the continuous part from
its last observed value, the statistic whose small-cell limit is c times
the triangular overshoot law.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._codes import (CAUSE_CODES, CAUSE_NAMES, KIND_EXIT, KIND_JUMP,
                     KIND_STEP, OBS_DIFFUSION, OBS_INITIAL, OBS_JUMP)
from .errors import ConfigError

__all__ = [
    "GridScheme",
    "cell_of",
    "JumpRecord",
    "InternalPath",
    "OvershootRecord",
    "SampledPath",
    "extract_observations",
    "overshoot_at",
    "read_observations_csv",
]

_SNAP_REL = 1e-12


@dataclass(frozen=True)
class GridScheme:
    """Regular price grid {k * c * eps} with cell width c * eps."""

    eps: float
    c: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps > 0.0):
            raise ConfigError("GridScheme: eps must be positive and finite")
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise ConfigError("GridScheme: c must be positive and finite")

    @property
    def width(self) -> float:
        return self.c * self.eps

    @property
    def snap(self) -> float:
        return _SNAP_REL * self.width


def _cell_lines(y: float, w: float, snap: float) -> tuple[int, int]:
    """Grid-line indices (lo, hi) of the restart cell around y."""
    r = math.floor(y / w + 0.5)
    if abs(y - r * w) <= snap:
        return int(r) - 1, int(r) + 1
    f = int(math.floor(y / w))
    # the division can land one line off; trust the products, not the ratio
    if f * w > y:
        f -= 1
    elif (f + 1) * w <= y:
        f += 1
    return f, f + 1


def cell_of(y: float, grid: GridScheme) -> tuple[float, float]:
    """Restart cell A_y as (low, high) price bounds."""
    if not math.isfinite(y):
        raise ValueError("cell_of: position must be finite")
    lo, hi = _cell_lines(float(y), grid.width, grid.snap)
    return lo * grid.width, hi * grid.width


@dataclass(frozen=True)
class JumpRecord:
    """One jump: chronological index p, its time, size, and left limit."""

    p: int
    time: float
    size: float
    left: float = math.nan

    @property
    def right(self) -> float:
        return self.left + self.size


@dataclass
class InternalPath:
    """Full-resolution simulated path, produced by the simulators.

    ``kinds`` tags each sample: plain step, exact grid-line exit, or
    post-jump value. Times are strictly increasing; jump records are
    embedded at their exact times with left and right values.
    """

    times: np.ndarray
    values: np.ndarray
    kinds: np.ndarray
    jumps: list[JumpRecord]
    scheme: str
    horizon: float
    x0: float
    stream_id: int | None = None

    def validate(self) -> None:
        if self.times.shape != self.values.shape or self.times.shape != self.kinds.shape:
            raise ValueError("InternalPath: ragged sample arrays")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("InternalPath: sample times must be strictly increasing")
        for q, rec in enumerate(self.jumps):
            if rec.p != q:
                raise ValueError("InternalPath: jump indices out of order")


@dataclass(frozen=True)
class OvershootRecord:
    """Scaled pre-jump displacement alpha of the continuous part."""

    p: int
    time: float
    alpha: float


@dataclass
class SampledPath:
    """Observations extracted from an InternalPath, with tau_0 = 0 first."""

    times: np.ndarray
    values: np.ndarray
    causes: np.ndarray
    jumps: list[JumpRecord]
    overshoots: list[OvershootRecord]
    grid: GridScheme
    horizon: float
    x0: float
    scheme: str = ""
    truncated: bool = False

    @property
    def n_observations(self) -> int:
        """Number of exit observations, not counting the initial point."""
        return int(self.times.shape[0] - 1)

    def to_csv(self, fh) -> None:
        """Write (j, tau, x, cause) rows; floats via repr for exactness."""
        fh.write("j,tau,x,cause\n")
        for j in range(self.times.shape[0]):
            fh.write(f"{j},{float(self.times[j])!r},{float(self.values[j])!r},"
                     f"{CAUSE_NAMES[int(self.causes[j])]}\n")

    def overshoots_to_csv(self, fh) -> None:
        fh.write("p,time,alpha\n")
        for rec in self.overshoots:
            fh.write(f"{rec.p},{float(rec.time)!r},{float(rec.alpha)!r}\n")

    def as_internal(self) -> InternalPath:
        """Re-embed the observations as a (coarse) InternalPath."""
        kind_map = {OBS_INITIAL: KIND_STEP, OBS_DIFFUSION: KIND_EXIT,
                    OBS_JUMP: KIND_JUMP}
        kinds = np.array([kind_map[int(cz)] for cz in self.causes], dtype=np.int8)
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times[-1] < self.horizon:
            # Close the path at the horizon; the value is strictly inside
            # its restart cell, so this adds no observation on re-extraction.
            times = np.concatenate((times, (self.horizon,)))
            values = np.concatenate((values, (values[-1],)))
            kinds = np.concatenate((kinds, np.array([KIND_STEP], dtype=np.int8)))
        return InternalPath(times=times, values=values, kinds=kinds,
                            jumps=list(self.jumps), scheme=self.scheme,
                            horizon=self.horizon, x0=self.x0)


def read_observations_csv(fh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back a SampledPath CSV: (times, values, cause codes)."""
    header = fh.readline().strip()
    if header != "j,tau,x,cause":
        raise ValueError(f"unexpected observations header: {header!r}")
    times, values, causes = [], [], []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        _, tau, x, cause = line.split(",")
        times.append(float(tau))
        values.append(float(x))
        causes.append(CAUSE_CODES[cause])
    return (np.asarray(times), np.asarray(values),
            np.asarray(causes, dtype=np.int8))


def extract_observations(path: InternalPath, grid: GridScheme) -> SampledPath:
    """Replay a path through the cell automaton and collect observations.

    Observation j+1 is the first sample at or beyond the boundary of the
    cell restarted at observation j. Diffusion samples observe the crossed
    line itself; jump samples observe their landing value (and only if it
    leaves the cell). The path's own resolution bounds what can be seen:
    one observation per sample, at the first crossed boundary.
    """
    kb = backend.get_backend()
    w = grid.width
    snap = grid.snap
    times = np.ascontiguousarray(path.times, dtype=np.float64)
    values = np.ascontiguousarray(path.values, dtype=np.float64)
    kinds = np.ascontiguousarray(path.kinds, dtype=np.int8)
    n = times.shape[0]
    lo0, hi0 = _cell_lines(float(values[0]), w, snap)
    out_i = np.empty(n, dtype=np.int64)
    out_v = np.empty(n, dtype=np.float64)
    out_c = np.empty(n, dtype=np.int8)
    no, _, _, status = kb.walk_observations(times, values, kinds, w, snap,
                                            lo0, hi0, out_i, out_v, out_c)
    if status:
        raise RuntimeError("extract_observations: output buffer overflow")
    obs_times = np.concatenate(((times[0],), times[out_i[:no]]))
    obs_values = np.concatenate(((values[0],), out_v[:no]))
    obs_causes = np.concatenate((np.array([OBS_INITIAL], dtype=np.int8),
                                 out_c[:no]))

    truncated = False
    cover = path.horizon - 1e-12 * max(1.0, abs(path.horizon))
    if times[-1] < cover:
        truncated = True
        warnings.warn("path ends before the horizon; observations truncated",
                      UserWarning, stacklevel=2)

    overshoots = _jump_overshoots(path, grid, obs_times, obs_values)
    return SampledPath(times=obs_times, values=obs_values, causes=obs_causes,
                       jumps=list(path.jumps), overshoots=overshoots,
                       grid=grid, horizon=path.horizon, x0=float(values[0]),
                       scheme=path.scheme, truncated=truncated)


def _jump_overshoots(path, grid, obs_times, obs_values):
    """Per-jump scaled displacement of the continuous part since tau^-."""
    out = []
    for rec in path.jumps:
        j = int(np.searchsorted(obs_times, rec.time, side="left")) - 1
        if j < 0:
            j = 0
        base_t = obs_times[j]
        base_x = obs_values[j]
        left = rec.left
        if math.isnan(left):
            k = int(np.searchsorted(path.times, rec.time, side="left"))
            if k < path.times.shape[0] and path.times[k] == rec.time:
                left = float(path.values[k]) - rec.size
            else:
                continue
        # Remove intervening small jumps: alpha concerns the Brownian part.
        adj = sum(r.size for r in path.jumps
                  if base_t < r.time < rec.time)
        alpha = (left - base_x - adj) / grid.eps
        out.append(OvershootRecord(p=rec.p, time=rec.time, alpha=alpha))
    return out


def overshoot_at(t: float, path: InternalPath, grid: GridScheme) -> float:
    """Scaled displacement of the continuous part at time t since tau^-(t).

    tau^-(t) is the last observation time at or before t (the initial time
    when none exists). Jumps strictly inside the window are subtracted so
    the statistic tracks the Brownian part; the stated limit law applies to
    pure-diffusion windows.
    """
    if not math.isfinite(t) or t < 0.0:
        raise ValueError("overshoot_at: time must be nonnegative and finite")
    if t > path.horizon:
        raise ValueError("overshoot_at: time beyond the path horizon")
    sp = extract_observations(path, grid)
    j = int(np.searchsorted(sp.times, t, side="right")) - 1
    if j < 0:
        j = 0
    i = int(np.searchsorted(path.times, t, side="right")) - 1
    if i < 0:
        raise ValueError("overshoot_at: time precedes the first path sample")
    x_t = float(path.values[i])
    adj = sum(r.size for r in path.jumps if sp.times[j] < r.time <= t)
    return (x_t - float(sp.values[j]) - adj) / grid.eps
