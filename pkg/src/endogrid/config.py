"""TOML run configuration: strict schema, verbatim provenance.

The schema is deliberately rigid: every table rejects keys it does not
know, listing the allowed ones, so typos fail before any simulation. The
raw config text travels with the parsed object and is embedded in every
output file; command-line overrides are appended as an explicit
``[overrides]`` section so outputs stay regenerable from what they embed.

Units: prices are in the price unit of X, times in the time unit of t;
``eps`` is a price, ``delta`` and ``t`` are times, ``seed`` is an integer.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import ConfigError
from .path_sim import JumpSpec, ModelSpec, SizeLaw, TimeFunction
from .scheme import GridScheme
from .validation import SCHEMES, RunConfig

__all__ = ["LoadedConfig", "parse_config", "load_config", "append_overrides"]


@dataclass(frozen=True)
class LoadedConfig:
    """Parsed run configuration plus the exact text it came from."""

    run: RunConfig
    r_count: int
    eps_list: tuple
    tol: float
    out: str | None
    text: str


def _check_keys(tbl: dict, allowed: tuple, where: str) -> None:
    unknown = sorted(set(tbl) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key {unknown[0]!r} in [{where}]; allowed keys: "
            f"{sorted(allowed)}")


def _number(tbl, key, where, default=None, required=False):
    if key not in tbl:
        if required:
            raise ConfigError(f"[{where}] requires key {key!r}")
        return default
    v = tbl[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[{where}] {key} must be a number")
    return float(v)


def _integer(tbl, key, where, default=None, required=False):
    if key not in tbl:
        if required:
            raise ConfigError(f"[{where}] requires key {key!r}")
        return default
    v = tbl[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"[{where}] {key} must be an integer")
    return int(v)


def _numlist(tbl, key, where):
    v = tbl.get(key, None)
    if v is None:
        return None
    if not isinstance(v, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError(f"[{where}] {key} must be a list of numbers")
    return [float(x) for x in v]


def _time_function(tbl, where: str) -> TimeFunction:
    if not isinstance(tbl, dict):
        raise ConfigError(f"[{where}] must be a table")
    kind = tbl.get("kind")
    if kind == "constant":
        _check_keys(tbl, ("kind", "value"), where)
        return TimeFunction.constant(_number(tbl, "value", where, required=True))
    if kind == "linear":
        _check_keys(tbl, ("kind", "value", "slope"), where)
        return TimeFunction.linear(_number(tbl, "value", where, required=True),
                                   _number(tbl, "slope", where, required=True))
    if kind == "sinusoid":
        _check_keys(tbl, ("kind", "value", "amplitude", "frequency", "phase"),
                    where)
        return TimeFunction.sinusoid(
            _number(tbl, "value", where, required=True),
            _number(tbl, "amplitude", where, required=True),
            _number(tbl, "frequency", where, required=True),
            _number(tbl, "phase", where, default=0.0))
    raise ConfigError(
        f"[{where}] kind must be one of ['constant', 'linear', 'sinusoid']")


def _size_law(tbl, where: str) -> SizeLaw:
    if not isinstance(tbl, dict):
        raise ConfigError(f"[{where}] must be a table")
    kind = tbl.get("kind")
    if kind == "constant":
        _check_keys(tbl, ("kind", "value"), where)
        return SizeLaw.constant(_number(tbl, "value", where, required=True))
    if kind == "uniform":
        _check_keys(tbl, ("kind", "low", "high"), where)
        return SizeLaw.uniform(_number(tbl, "low", where, required=True),
                               _number(tbl, "high", where, required=True))
    if kind == "normal":
        _check_keys(tbl, ("kind", "mean", "std"), where)
        return SizeLaw.normal(_number(tbl, "mean", where, required=True),
                              _number(tbl, "std", where, required=True))
    if kind == "choice":
        _check_keys(tbl, ("kind", "values", "probs"), where)
        values = _numlist(tbl, "values", where)
        if values is None:
            raise ConfigError(f"[{where}] requires key 'values'")
        return SizeLaw.choice(values, _numlist(tbl, "probs", where) or ())
    raise ConfigError(f"[{where}] kind must be one of "
                      f"['constant', 'uniform', 'normal', 'choice']")


def _jump_spec(tbl, where: str) -> JumpSpec:
    kind = tbl.get("kind", "none")
    if kind == "none":
        _check_keys(tbl, ("kind",), where)
        return JumpSpec.none()
    if kind == "fixed":
        _check_keys(tbl, ("kind", "times", "sizes"), where)
        times = _numlist(tbl, "times", where)
        sizes = _numlist(tbl, "sizes", where)
        if times is None or sizes is None:
            raise ConfigError(f"[{where}] fixed jumps require times and sizes")
        return JumpSpec.fixed(times, sizes)
    if kind == "poisson":
        _check_keys(tbl, ("kind", "intensity", "size"), where)
        if "intensity" not in tbl or "size" not in tbl:
            raise ConfigError(f"[{where}] poisson jumps require intensity and size")
        return JumpSpec.poisson(_time_function(tbl["intensity"],
                                               where + ".intensity"),
                                _size_law(tbl["size"], where + ".size"))
    raise ConfigError(
        f"[{where}] kind must be one of ['none', 'poisson', 'fixed']")


def parse_config(text: str) -> LoadedConfig:
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    _check_keys(doc, ("model", "grid", "run", "overrides"), "top level")

    model = doc.get("model")
    if not isinstance(model, dict):
        raise ConfigError("config requires a [model] table")
    _check_keys(model, ("t_max", "x0", "drift", "vol", "jumps"), "model")
    if "drift" not in model or "vol" not in model:
        raise ConfigError("[model] requires drift and vol tables")
    spec = ModelSpec(
        drift=_time_function(model["drift"], "model.drift"),
        vol=_time_function(model["vol"], "model.vol"),
        jumps=_jump_spec(model.get("jumps", {"kind": "none"}), "model.jumps"),
        t_max=_number(model, "t_max", "model", required=True),
        x0=_number(model, "x0", "model", default=0.0))

    gr = doc.get("grid")
    if not isinstance(gr, dict):
        raise ConfigError("config requires a [grid] table")
    _check_keys(gr, ("eps", "eps_list", "c"), "grid")
    c = _number(gr, "c", "grid", default=1.0)
    eps = _number(gr, "eps", "grid")
    eps_list = _numlist(gr, "eps_list", "grid")
    if (eps is None) == (eps_list is None):
        raise ConfigError("[grid] requires exactly one of eps / eps_list")
    if eps_list is not None:
        if len(eps_list) == 0:
            raise ConfigError("[grid] eps_list must be nonempty")
        eps = eps_list[0]
    grid = GridScheme(eps=eps, c=c)

    run = doc.get("run", {})
    _check_keys(run, ("scheme", "seed", "replications", "t", "delta",
                      "workers", "tol", "out"), "run")
    scheme = run.get("scheme", "exact")
    if not isinstance(scheme, str) or scheme not in SCHEMES:
        raise ConfigError(
            f"unknown scheme {scheme!r}; valid choices: {SCHEMES}")
    overrides = doc.get("overrides", {})
    _check_keys(overrides, ("seed", "out", "tol", "workers"), "overrides")

    seed = _integer(overrides, "seed", "overrides",
                    default=_integer(run, "seed", "run", default=0))
    workers = _integer(overrides, "workers", "overrides",
                       default=_integer(run, "workers", "run"))
    tol = _number(overrides, "tol", "overrides",
                  default=_number(run, "tol", "run", default=1e-8))
    out = overrides.get("out", run.get("out"))
    if out is not None and not isinstance(out, str):
        raise ConfigError("[run] out must be a string path")

    cfg = RunConfig(spec=spec, grid=grid, scheme=scheme, seed=seed,
                    t=_number(run, "t", "run"),
                    delta=_number(run, "delta", "run"),
                    workers=workers)
    return LoadedConfig(run=cfg,
                        r_count=_integer(run, "replications", "run",
                                         default=1000),
                        eps_list=tuple(eps_list or ()), tol=tol, out=out,
                        text=text)


def load_config(path: str) -> LoadedConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def append_overrides(text: str, overrides: dict) -> str:
    """Re-emit config text with CLI overrides as an explicit section."""
    items = {k: v for k, v in overrides.items() if v is not None}
    if not items:
        return text
    lines = ["", "[overrides]"]
    for k in sorted(items):
        v = items[k]
        lines.append(f'{k} = "{v}"' if isinstance(v, str) else f"{k} = {v}")
    return text.rstrip("\n") + "\n" + "\n".join(lines) + "\n"
