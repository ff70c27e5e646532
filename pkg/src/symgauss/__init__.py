"""Partition functions of Gaussian distributions on symmetric spaces."""

__version__ = "0.1.0"

from .core import EnsembleSpec, Method, PartitionResult, Potential, PrefactorConvention, Space  # noqa: E402
from .errors import (  # noqa: E402
    DomainError,
    PrecisionError,
    QuadratureError,
    SolverError,
    SymgaussError,
    TuningError,
)
from .finite_n import direct_quadrature_logZ, z1_finite, z2_closed_form, zS_finite  # noqa: E402
from .large_n import f_uni, large_n_partition, master_field_q, master_field_sw, siegel_saddle_solve, trilog  # noqa: E402
from .montecarlo import coulomb_metropolis, initial_gas_state, mc_log_partition, mc_partition  # noqa: E402

__all__ = [
    "DomainError",
    "EnsembleSpec",
    "Method",
    "PartitionResult",
    "Potential",
    "PrecisionError",
    "PrefactorConvention",
    "QuadratureError",
    "SolverError",
    "Space",
    "SymgaussError",
    "TuningError",
    "coulomb_metropolis",
    "direct_quadrature_logZ",
    "f_uni",
    "initial_gas_state",
    "large_n_partition",
    "master_field_q",
    "master_field_sw",
    "mc_log_partition",
    "mc_partition",
    "siegel_saddle_solve",
    "trilog",
    "z1_finite",
    "z2_closed_form",
    "zS_finite",
]
