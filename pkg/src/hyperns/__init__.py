"""Spectral Galerkin simulator for stochastic hyperviscous Navier-Stokes on the 3-torus."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    SpectralField,
    TorusConfig,
    apply_fractional_stokes,
    from_physical,
    galerkin_truncate,
    leray_project,
    sobolev_norm,
    to_physical,
)
from .nonlinear import bilinear_B, bilinear_B_direct, estimate_inequality_constant, pairing  # noqa: E402
from .stochastic import (  # noqa: E402
    NoiseConfig,
    check_regularity_condition,
    ou_exact_step,
    ou_path_norm,
    sample_increment,
)
from .dynamics import (  # noqa: E402
    BlowUpError,
    SolverConfig,
    regularity_suite,
    simulate,
    smooth_initial,
    uniqueness_probe,
)

__all__ = [
    "SpectralField", "TorusConfig", "apply_fractional_stokes", "from_physical",
    "galerkin_truncate", "leray_project", "sobolev_norm", "to_physical",
    "bilinear_B", "bilinear_B_direct", "estimate_inequality_constant", "pairing",
    "NoiseConfig", "check_regularity_condition", "ou_exact_step", "ou_path_norm",
    "sample_increment", "BlowUpError", "SolverConfig", "regularity_suite", "simulate",
    "smooth_initial", "uniqueness_probe",
]
