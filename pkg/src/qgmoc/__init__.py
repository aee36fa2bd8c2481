"""Simulation and modulus-of-continuity certificates for dissipative SQG."""

from .functionals import (
    case_bounds,
    dissipation_functional,
    dominance_margin,
    dominance_report,
    find_admissible,
    riesz_modulus,
)
from .modulus import (
    CertificateConstants,
    DominanceReport,
    KnvModulus,
    knv_omega,
    knv_omega_prime,
    smallness_constant,
    validate_params,
)
from .monitor import (
    BreakthroughRecord,
    EmpiricalModulus,
    TrajectoryReport,
    check_moc,
    empirical_modulus,
    rescaled_modulus,
    smallness_check,
)
from .solver import SolverConfig, State, run, step
from .spectral import Grid, RealField, SpectralField

__all__ = [
    "BreakthroughRecord", "CertificateConstants", "DominanceReport", "EmpiricalModulus",
    "Grid", "KnvModulus", "RealField", "SolverConfig", "SpectralField", "State",
    "TrajectoryReport", "case_bounds", "check_moc", "dissipation_functional",
    "dominance_margin", "dominance_report", "empirical_modulus", "find_admissible",
    "knv_omega", "knv_omega_prime", "rescaled_modulus", "riesz_modulus", "run",
    "smallness_check", "smallness_constant", "step", "validate_params",
]
