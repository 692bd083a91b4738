"""Time the numba kernels against the pure-numpy fallbacks.

The two backends are bit-identical in output; this script measures what
the compiled path buys at representative sizes, plus one end-to-end
simulate/extract comparison. Numba is warmed up before timing so JIT
compilation is not billed to the first measurement.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import importlib
import time

import numpy as np

from endogrid import (
    GridScheme,
    JumpSpec,
    ModelSpec,
    SizeLaw,
    TimeFunction,
    backend,
    extract_observations,
    limit_law,
    simulate_exact,
)
from endogrid import _kernels_numpy as knp


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _row(name, t_np, t_nb):
    ratio = t_np / t_nb if t_nb > 0 else float("inf")
    print(f"{name:<22} numpy {t_np * 1e3:9.3f} ms   "
          f"numba {t_nb * 1e3:9.3f} ms   speedup {ratio:6.1f}x")


def bench_exit_scan(knb, tables, repeats):
    rng = np.random.default_rng(11)
    n = 200_000
    u = np.maximum(rng.random(n), 1.1102230246251565e-16)
    xi = -np.log1p(-u)
    mv = np.log(xi)
    q = tables.exit_q
    cum = np.empty(n)
    budget = 0.6 * n  # crossing lands deep in the scan

    def run(mod):
        return lambda: mod.exit_scan(xi, mv, q.vals, q.slopes, q.dm, q.m_min,
                                     q.m_cap, q.tail_a, q.tail_b, budget, cum)

    run(knb)()  # warm the JIT
    _row("exit_scan 200k", _best_of(run(knp), repeats),
         _best_of(run(knb), repeats))


def bench_euler_cells(knb, repeats):
    rng = np.random.default_rng(12)
    m = 500_000
    w = 0.01
    dt = w * w / 50.0
    t = np.arange(m + 1) * dt
    mu = np.zeros(m)
    sd = np.full(m, np.sqrt(dt))
    normals = rng.standard_normal(m)
    u2 = rng.random((m, 2))
    jump_size = np.zeros(m)
    jump_flag = np.zeros(m, dtype=np.int8)
    cap = 2 * m + 16

    def run(mod):
        out = (np.empty(cap), np.empty(cap), np.empty(cap, dtype=np.int8),
               np.empty(cap))
        return lambda: mod.euler_cells(0.0, -1, 1, w, 1e-12 * w, t, mu, sd,
                                       normals, u2, jump_size, jump_flag,
                                       *out)

    run(knb)()
    _row("euler_cells 500k", _best_of(run(knp), repeats),
         _best_of(run(knb), repeats))


def bench_walk(knb, repeats):
    rng = np.random.default_rng(13)
    n = 500_000
    w = 0.01
    values = np.cumsum(rng.normal(0.0, 0.4 * w, n))
    kinds = np.zeros(n, dtype=np.int8)
    times = np.arange(n) * 1e-6

    def run(mod):
        out_i = np.empty(n, dtype=np.int64)
        out_v = np.empty(n)
        out_c = np.empty(n, dtype=np.int8)
        return lambda: mod.walk_observations(times, values, kinds, w,
                                             1e-12 * w, -1, 1, out_i, out_v,
                                             out_c)

    run(knb)()
    _row("walk_observations 500k", _best_of(run(knp), repeats),
         _best_of(run(knb), repeats))


def bench_end_to_end(repeats):
    spec = ModelSpec(drift=TimeFunction.constant(0.0),
                     vol=TimeFunction.constant(1.0),
                     jumps=JumpSpec.poisson(TimeFunction.constant(5.0),
                                            SizeLaw.uniform(-0.2, 0.2)),
                     t_max=1.0)
    grid = GridScheme(eps=0.005)
    tables = limit_law.get_tables(1e-8)

    def run():
        rng = np.random.default_rng(99)
        path = simulate_exact(spec, grid, rng, tables=tables)
        extract_observations(path, grid)

    results = {}
    for name in ("numpy", "numba"):
        backend.set_backend(name)
        try:
            run()  # warm caches and JIT alike
            results[name] = _best_of(run, repeats)
        finally:
            backend.set_backend(None)
    _row("simulate+extract", results["numpy"], results["numba"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repetitions per case (best is reported)")
    args = ap.parse_args()

    try:
        knb = importlib.import_module("endogrid._kernels_numba")
    except ImportError as exc:
        raise SystemExit(f"numba backend unavailable: {exc}")

    tables = limit_law.get_tables(1e-8)
    print(f"repeats per case: {args.repeats} (best shown)")
    bench_exit_scan(knb, tables, args.repeats)
    bench_euler_cells(knb, args.repeats)
    bench_walk(knb, args.repeats)
    bench_end_to_end(args.repeats)


if __name__ == "__main__":
    main()
