"""Monte Carlo harness: replications, limit sampling, and KS reporting.

A run simulates R independent paths, extracts their grid observations,
and collects the standardized realized-variance error together with the
scaled overshoot and observation age at the horizon. The empirical laws
are compared against the limit objects: a centered Gaussian with variance
(2/3) c^2 int sigma^2 plus per-jump 2 * size * c * eta contributions, the
scaled overshoot law c * eta, and the renewal age law.

Comparisons always condition on the jump scenario: the limit sample is
built from the same fixed jump configuration the paths carry. Runs whose
jump times are themselves random get moments and overshoot/age tests
only, since an unconditional standardized-error comparison would mix
distinct conditional laws.

Determinism: replication i draws from SeedSequence(entropy=seed,
spawn_key=(i,)); the limit sample uses spawn_key=(R,). Results are
reduced in replication order, so reports are byte-stable for a fixed
(config, seed) regardless of worker count.
"""

from __future__ import annotations

import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as _st

from . import limit_law
from .errors import ConfigError
from .estimators import quadratic_variation, realized_variance, standardized_stat
from .path_sim import ModelSpec, simulate_euler_bridge, simulate_exact
from .scheme import GridScheme, JumpRecord, extract_observations

__all__ = [
    "SCHEMES",
    "RunConfig",
    "ReplicationRow",
    "LimitSample",
    "ValidationReport",
    "run_replications",
    "sample_limit",
    "ks_distance",
    "convergence_sweep",
]

SCHEMES = ("exact", "euler-bridge")

_KS_THRESHOLD = 0.02


@dataclass(frozen=True)
class RunConfig:
    """One validation run: model, grid, scheme choice, horizon, seed."""

    spec: ModelSpec
    grid: GridScheme
    scheme: str = "exact"
    seed: int = 0
    t: float | None = None
    delta: float | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(
                f"unknown scheme {self.scheme!r}; valid choices: {SCHEMES}")
        if self.t is not None and not (0.0 < self.t <= self.spec.t_max):
            raise ConfigError("RunConfig: t must lie in (0, t_max]")

    @property
    def horizon(self) -> float:
        return self.spec.t_max if self.t is None else self.t


@dataclass(frozen=True)
class ReplicationRow:
    """Per-replication record, one CSV row."""

    seed: int
    eps: float
    rv: float
    qv_cont: float
    qv_jump: float
    z: float
    n_obs: int
    boundary: float


@dataclass(frozen=True)
class LimitSample:
    """Draws of the limit: Gaussian part u, jump part v, total u + v."""

    u: np.ndarray
    v: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.u + self.v


def sample_limit(spec: ModelSpec, jumps: list[JumpRecord], t: float,
                 grid: GridScheme, r_count: int, rng: np.random.Generator,
                 *, tables=None) -> LimitSample:
    """R draws of the limit law conditional on a fixed jump scenario.

    Draw order: one normal block for the Gaussian component, then one eta
    block per jump in time order.
    """
    if tables is None:
        tables = limit_law.get_tables()
    c = grid.c
    var_u = (2.0 / 3.0) * c * c * float(spec.vol.integral_sq(t))
    u = math.sqrt(var_u) * rng.standard_normal(r_count)
    v = np.zeros(r_count)
    for rec in jumps:
        if rec.time <= t:
            eta = limit_law.sample_eta(rng, n=r_count, tables=tables)
            v = v + 2.0 * rec.size * c * eta
    return LimitSample(u=u, v=v)


def ks_distance(sample, other=None, cdf=None) -> float:
    """Kolmogorov-Smirnov sup distance, two-sample or vs an analytic CDF."""
    a = np.asarray(sample, dtype=np.float64)
    if a.size == 0:
        raise ValueError("ks_distance: empty sample")
    if (other is None) == (cdf is None):
        raise ValueError("ks_distance: pass exactly one of other/cdf")
    if cdf is not None:
        return float(_st.kstest(a, cdf).statistic)
    b = np.asarray(other, dtype=np.float64)
    if b.size == 0:
        raise ValueError("ks_distance: empty sample")
    return float(_st.ks_2samp(a, b, method="asymp").statistic)


@dataclass
class ValidationReport:
    """Aggregated run results plus the samples behind them.

    ``runtime_s`` stays in memory (and on stderr) but is never serialized,
    so reports are byte-identical across machines of different speed.
    """

    scheme: str
    eps: float
    c: float
    r_count: int
    t: float
    seed: int
    z_mean: float
    z_var: float
    limit_var: float
    ks: dict
    passed: dict
    truncated: int
    rows: list[ReplicationRow] = field(repr=False)
    z_values: np.ndarray = field(repr=False)
    overshoots_t: np.ndarray = field(repr=False)
    ages_t: np.ndarray = field(repr=False)
    limit_sample: LimitSample | None = field(repr=False, default=None)
    runtime_s: float = field(default=0.0, compare=False)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def to_json(self, fh) -> None:
        doc = {
            "scheme": self.scheme,
            "eps": self.eps,
            "c": self.c,
            "r_count": self.r_count,
            "t": self.t,
            "seed": self.seed,
            "z_mean": self.z_mean,
            "z_var": self.z_var,
            "limit_var": self.limit_var,
            "ks": self.ks,
            "passed": self.passed,
            "truncated": self.truncated,
            "all_passed": self.all_passed,
        }
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")

    def rows_to_csv(self, fh) -> None:
        fh.write("seed,eps,rv,qv_cont,qv_jump,z,n_obs,boundary_term\n")
        for r in self.rows:
            fh.write(f"{r.seed},{r.eps!r},{r.rv!r},{r.qv_cont!r},"
                     f"{r.qv_jump!r},{r.z!r},{r.n_obs},{r.boundary!r}\n")

    def cdf_pairs_to_csv(self, fh) -> None:
        """Plot-ready empirical CDF of z against the limit CDF."""
        z = np.sort(self.z_values)
        ec = np.arange(1, z.shape[0] + 1) / z.shape[0]
        if self.limit_sample is not None:
            ls = np.sort(self.limit_sample.total)
            lc = np.searchsorted(ls, z, side="right") / ls.shape[0]
        else:
            lc = np.full(z.shape[0], math.nan)
        fh.write("z,ecdf,limit_cdf\n")
        for i in range(z.shape[0]):
            fh.write(f"{float(z[i])!r},{float(ec[i])!r},{float(lc[i])!r}\n")


def _fixed_jumps(spec: ModelSpec) -> list[JumpRecord] | None:
    """The jump scenario when it is deterministic; None when random."""
    js = spec.jumps
    if js.kind == "none":
        return []
    if js.kind == "fixed":
        return [JumpRecord(p=p, time=t, size=s)
                for p, (t, s) in enumerate(zip(js.times, js.sizes))]
    return None


def _replicate(config: RunConfig, i: int, tables) -> tuple:
    spec = config.spec
    grid = config.grid
    t = config.horizon
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(i,)))
    if config.scheme == "exact":
        path = simulate_exact(spec, grid, rng, tables=tables)
    else:
        path = simulate_euler_bridge(spec, grid, config.delta, rng)
    sampled = extract_observations(path, grid)
    stat = standardized_stat(sampled, spec, path.jumps, t, grid)
    qv = quadratic_variation(spec, path.jumps, t)
    rv = realized_variance(sampled, t)

    j = int(np.searchsorted(sampled.times, t, side="right")) - 1
    tau = float(sampled.times[max(j, 0)])
    k = int(np.searchsorted(path.times, t, side="right")) - 1
    x_t = float(path.values[k])
    adj = sum(r.size for r in path.jumps if tau < r.time <= t)
    alpha_t = (x_t - float(sampled.values[max(j, 0)]) - adj) / grid.eps
    age_t = (t - tau) / (grid.eps * grid.eps)

    row = ReplicationRow(seed=i, eps=grid.eps, rv=rv, qv_cont=qv.continuous,
                         qv_jump=qv.jump, z=stat.value,
                         n_obs=sampled.n_observations, boundary=stat.boundary)
    return row, alpha_t, age_t, sampled.truncated


def run_replications(config: RunConfig, r_count: int, *,
                     workers: int | None = None,
                     tables=None) -> ValidationReport:
    """Run R replications and compare against the conditional limit laws.

    Requires R >= 100. Per-replication randomness comes from
    spawn_key=(i,), so results do not depend on scheduling or worker
    count; the reduction happens in replication order.
    """
    if r_count < 100:
        raise ConfigError("run_replications: R must be at least 100")
    if tables is None:
        tables = limit_law.get_tables()
    t0 = time.perf_counter()
    spec = config.spec
    grid = config.grid
    t = config.horizon
    nw = workers or config.workers or 1

    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            results = list(ex.map(
                lambda i: _replicate(config, i, tables), range(r_count)))
    else:
        results = [_replicate(config, i, tables) for i in range(r_count)]

    rows = [r[0] for r in results]
    z = np.array([r.z for r in rows])
    alphas = np.array([r[1] for r in results])
    ages = np.array([r[2] for r in results])
    truncated = sum(1 for r in results if r[3])

    fixed = _fixed_jumps(spec)
    limit = None
    ks: dict[str, float] = {}
    if fixed is not None:
        rng_lim = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(r_count,)))
        limit = sample_limit(spec, fixed, t, grid, r_count, rng_lim,
                             tables=tables)
        ks["z_vs_limit"] = ks_distance(z, other=limit.total)

    eta = limit_law.EtaDistribution(tables=tables)
    c = grid.c
    ks["overshoot_vs_c_eta"] = ks_distance(
        alphas, cdf=lambda y: eta.cdf(np.asarray(y) / c))
    sig_t = float(spec.vol(t))
    age_law = limit_law.RenewalAgeDistribution(
        exit_law=limit_law.ExitTimeDistribution(c_half=c, sigma=sig_t,
                                                tables=tables))
    ks["age_vs_renewal"] = ks_distance(ages, cdf=age_law.cdf)

    passed = {k: v < _KS_THRESHOLD for k, v in ks.items()}
    if fixed is not None:
        theory_var = (2.0 / 3.0) * c * c * (
            float(spec.vol.integral_sq(t))
            + sum(r.size ** 2 for r in fixed if r.time <= t))
    else:
        theory_var = math.nan

    report = ValidationReport(
        scheme=config.scheme, eps=grid.eps, c=c, r_count=r_count, t=t,
        seed=config.seed, z_mean=float(np.mean(z)),
        z_var=float(np.var(z, ddof=1)),
        limit_var=theory_var,
        ks=ks, passed=passed, truncated=truncated, rows=rows,
        z_values=z, overshoots_t=alphas, ages_t=ages, limit_sample=limit,
        runtime_s=time.perf_counter() - t0)
    print(f"run_replications: scheme={config.scheme} eps={grid.eps} "
          f"R={r_count} in {report.runtime_s:.1f}s", file=sys.stderr)
    return report


def convergence_sweep(config: RunConfig, eps_list, r_count: int, *,
                      workers: int | None = None,
                      tables=None) -> list[ValidationReport]:
    """Run the pipeline per epsilon (decreasing); KS should shrink with eps.

    Each entry runs under seed + 7919*k so sweep entries are independent
    yet individually reproducible.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e1 >= e0 for e0, e1 in zip(eps_list, eps_list[1:])):
        raise ConfigError("convergence_sweep: eps values must decrease")
    out = []
    for k, eps in enumerate(eps_list):
        cfg = replace(config, grid=GridScheme(eps=eps, c=config.grid.c),
                      seed=config.seed + 7919 * k)
        out.append(run_replications(cfg, r_count, workers=workers,
                                    tables=tables))
    return out
