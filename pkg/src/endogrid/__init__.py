"""Realized variance under grid-endogenous observation times.

A price path is observed exactly when it leaves the cell of a regular
grid attached to its last observed value. This package provides the
limit laws of that observation scheme (cell exit times, renewal ages,
overshoots, confined positions), exact and Euler-bridge path simulators
producing the observation times, realized-variance estimators, and a
Monte Carlo harness that checks the distributional limits.
"""

from .backend import active_backend_name, set_backend
from .errors import ConfigError, UnsupportedSchemeError
from .estimators import (QVDecomposition, StandardizedStat, equidistant_rv,
                         quadratic_variation, realized_variance,
                         standardized_stat)
from .limit_law import (ConfinedKernel, EtaDistribution, ExitTimeDistribution,
                        LimitLawTables, RenewalAgeDistribution,
                        confined_kernel, eval_h, eval_h_closed, exit_time_cdf,
                        exit_time_survival, get_tables, renewal_age_cdf,
                        sample_confined_position, sample_eta, sample_exit,
                        sample_renewal_age)
from .path_sim import (JumpSpec, ModelSpec, SizeLaw, TimeFunction,
                       euler_first_exit_times, simulate_euler_bridge,
                       simulate_exact, simulate_jumps)
from .scheme import (GridScheme, InternalPath, JumpRecord, OvershootRecord,
                     SampledPath, cell_of, extract_observations, overshoot_at,
                     read_observations_csv)
from .validation import (LimitSample, RunConfig, ValidationReport,
                         convergence_sweep, ks_distance, run_replications,
                         sample_limit)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "UnsupportedSchemeError",
    "set_backend", "active_backend_name",
    "ConfinedKernel", "EtaDistribution", "ExitTimeDistribution",
    "LimitLawTables", "RenewalAgeDistribution",
    "confined_kernel", "eval_h", "eval_h_closed", "exit_time_cdf",
    "exit_time_survival", "get_tables", "renewal_age_cdf",
    "sample_confined_position", "sample_eta", "sample_exit",
    "sample_renewal_age",
    "GridScheme", "InternalPath", "JumpRecord", "OvershootRecord",
    "SampledPath", "cell_of", "extract_observations", "overshoot_at",
    "read_observations_csv",
    "TimeFunction", "SizeLaw", "JumpSpec", "ModelSpec",
    "simulate_jumps", "simulate_exact", "simulate_euler_bridge",
    "euler_first_exit_times",
    "QVDecomposition", "StandardizedStat", "realized_variance",
    "quadratic_variation", "standardized_stat", "equidistant_rv",
    "RunConfig", "LimitSample", "ValidationReport", "run_replications",
    "sample_limit", "ks_distance", "convergence_sweep",
    "__version__",
]
