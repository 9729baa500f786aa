"""Stationary beta-gamma directed polymers: Mellin-type special functions,
boundary laws, lattice partition functions and Monte Carlo checks."""

from .experiments import (
    Direction,
    ExperimentConfig,
    ExperimentResult,
    Stat,
    burke_test,
    clt_check,
    exit_mass_check,
    exponent_fit,
    free_energy_stats,
    lln_check,
    tail_check,
    variance_identity,
)
from .lattice import (
    Environment,
    LogPartitionGrid,
    PathSample,
    dump_env,
    exit_distribution,
    forward_dp,
    generate,
    load_env,
    reverse_dp,
    sample_path,
)
from .meldist import MellinLaw, cdf, density, l_kernel, quantile, sample
from .models import (
    ModelError,
    ModelKind,
    ModelSpec,
    characteristic_direction,
    expected_log_z,
    lln_constant,
    resolve,
)
from .specfun import DomainError, MellinFamily, polygamma, psi_f

__version__ = "0.1.0"
