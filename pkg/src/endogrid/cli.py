"""Command-line interface: tabulate limit laws, simulate, validate.

Every output embeds the exact configuration text (as ``#``-prefixed
comment lines in CSVs, as a field in JSON) together with the seed, so any
file can be regenerated bit-identically from its own contents. Runtimes
go to stderr only.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import limit_law
from .config import LoadedConfig, append_overrides, load_config, parse_config
from .errors import ConfigError
from .path_sim import simulate_euler_bridge, simulate_exact
from .scheme import extract_observations
from .validation import convergence_sweep, run_replications

DEFAULT_CONFIG = """\
[model]
t_max = 1.0

[model.drift]
kind = "constant"
value = 0.0

[model.vol]
kind = "constant"
value = 1.0

[model.jumps]
kind = "none"

[grid]
eps = 0.005
c = 1.0

[run]
scheme = "exact"
seed = 0
replications = 1000
"""


def _embed(fh, text: str) -> None:
    for line in text.rstrip("\n").split("\n"):
        fh.write(f"# {line}\n" if line else "#\n")


def _outdir(cfg: LoadedConfig) -> Path:
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> LoadedConfig:
    text = (Path(args.config).read_text(encoding="utf-8")
            if args.config else DEFAULT_CONFIG)
    # The output directory is a destination, not part of the data: keep it
    # out of the embedded text so reruns elsewhere stay byte-identical.
    text = append_overrides(text, {"seed": args.seed, "tol": args.tol,
                                   "workers": args.workers})
    cfg = parse_config(text)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out=args.out)
    return cfg


def cmd_density_table(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    tables = limit_law.get_tables(cfg.tol)
    c = cfg.run.grid.c
    sigma = float(cfg.run.spec.vol(0.0))

    with open(out / "overshoot_density.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        fh.write("y_scaled,h_density\n")
        for y, h in zip(tables.h_grid, tables.h_vals):
            fh.write(f"{float(y)!r},{float(h)!r}\n")
        dev = abs(trapezoid(tables.h_vals, tables.h_grid) - 1.0)
        fh.write(f"# integral_h_minus_1 = {dev!r} (must be <= 10*tol = "
                 f"{10 * cfg.tol!r})\n")

    scale = c * c / (sigma * sigma)
    z = np.linspace(0.0, 12.0 * scale, 2401)
    fdist = limit_law.ExitTimeDistribution(c_half=c, sigma=sigma,
                                           tables=tables)
    gdist = limit_law.RenewalAgeDistribution(exit_law=fdist)
    fv = fdist.cdf(z)
    with open(out / "exit_time_cdf.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        fh.write("z_scaled_time,F_cdf\n")
        for zz, ff in zip(z, fv):
            fh.write(f"{float(zz)!r},{float(ff)!r}\n")
        mean = trapezoid(1.0 - fv, z)
        fh.write(f"# mean_exit_time = {float(mean)!r} "
                 f"(theory c^2/sigma^2 = {scale!r})\n")

    gv = gdist.cdf(z)
    with open(out / "renewal_age_cdf.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        fh.write("z_scaled_time,G_cdf\n")
        for zz, gg in zip(z, gv):
            fh.write(f"{float(zz)!r},{float(gg)!r}\n")

    print(f"density-table: wrote 3 tables to {out}")
    print(f"|integral(h) - 1| = {dev:.3e} (<= {10 * cfg.tol:.1e})")
    print(f"mean exit time {float(trapezoid(1.0 - fv, z)):.9f} vs "
          f"c^2/sigma^2 = {scale:.9f}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    run = cfg.run
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=run.seed, spawn_key=(0,)))
    if run.scheme == "exact":
        path = simulate_exact(run.spec, run.grid, rng)
    else:
        path = simulate_euler_bridge(run.spec, run.grid, run.delta, rng)
    sampled = extract_observations(path, run.grid)

    from .estimators import quadratic_variation, realized_variance, \
        standardized_stat
    t = run.horizon
    stat = standardized_stat(sampled, run.spec, path.jumps, t, run.grid)
    qv = quadratic_variation(run.spec, path.jumps, t)
    rv = realized_variance(sampled, t)

    with open(out / "path.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        fh.write("t,x,kind\n")
        for i in range(path.times.shape[0]):
            fh.write(f"{float(path.times[i])!r},{float(path.values[i])!r},"
                     f"{int(path.kinds[i])}\n")
    with open(out / "observations.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        sampled.to_csv(fh)
    with open(out / "overshoots.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        sampled.overshoots_to_csv(fh)
    summary = {
        "scheme": run.scheme, "seed": run.seed, "t": t,
        "n_obs": sampled.n_observations, "rv": rv,
        "qv_cont": qv.continuous, "qv_jump": qv.jump,
        "z": stat.value, "boundary_term": stat.boundary,
        "n_jumps": len(path.jumps), "config": cfg.text,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    print(f"simulate: {sampled.n_observations} observations, "
          f"{len(path.jumps)} jumps; files in {out}")
    print(f"RV = {rv:.9f}  QV = {qv.total:.9f}  Z = {stat.value:.6f}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    run = cfg.run
    tables = limit_law.get_tables(cfg.tol)
    if cfg.eps_list:
        reports = convergence_sweep(run, cfg.eps_list, cfg.r_count,
                                    tables=tables)
    else:
        reports = [run_replications(run, cfg.r_count, tables=tables)]

    with open(out / "report.json", "w", encoding="utf-8") as fh:
        fh.write('{"config":')
        json.dump(cfg.text, fh)
        fh.write(',"runs":[')
        for i, rep in enumerate(reports):
            if i:
                fh.write(",")
            rep.to_json(_NoNewline(fh))
        fh.write("]}\n")

    with open(out / "sweep_table.csv", "w", encoding="utf-8") as fh:
        _embed(fh, cfg.text)
        fh.write("eps,z_mean,z_var,limit_var,ks_z,ks_overshoot,ks_age\n")
        for rep in reports:
            ksz = rep.ks.get("z_vs_limit", math.nan)
            fh.write(f"{rep.eps!r},{rep.z_mean!r},{rep.z_var!r},"
                     f"{rep.limit_var!r},{ksz!r},"
                     f"{rep.ks['overshoot_vs_c_eta']!r},"
                     f"{rep.ks['age_vs_renewal']!r}\n")

    ok = True
    for rep in reports:
        tag = f"eps={rep.eps:g}"
        with open(out / f"replications_{rep.eps:g}.csv", "w",
                  encoding="utf-8") as fh:
            _embed(fh, cfg.text)
            rep.rows_to_csv(fh)
        with open(out / f"cdf_pairs_{rep.eps:g}.csv", "w",
                  encoding="utf-8") as fh:
            _embed(fh, cfg.text)
            rep.cdf_pairs_to_csv(fh)
        for name, value in sorted(rep.ks.items()):
            passed = rep.passed[name]
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} {tag} {name} "
                  f"= {value:.4f} (< 0.02)")
        print(f"     {tag} z_var = {rep.z_var:.4f}"
              + ("" if math.isnan(rep.limit_var)
                 else f" (limit {rep.limit_var:.4f})"))
    print(f"validate: report in {out} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


class _NoNewline:
    """Suppresses the trailing newline ValidationReport.to_json appends."""

    def __init__(self, fh):
        self._fh = fh

    def write(self, s):
        self._fh.write(s.rstrip("\n") if s.endswith("\n") else s)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="endogrid",
        description="Grid-endogenous observation times: limit-law tables, "
                    "path simulation, and Monte Carlo validation.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("density-table", cmd_density_table),
                     ("simulate", cmd_simulate),
                     ("validate", cmd_validate)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="TOML config path (built-in default if omitted)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.set_defaults(fn=fn)
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
