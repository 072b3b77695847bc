"""Simulation laboratory for diffusions driven by a blurred price observable.

Subpackages by responsibility: exact blurring-moment algebra (moments),
Gaussian kernel fits (blur), the interacting-particle engine (engine),
closed-form and finite-difference cross-checks (oracle), and run
diagnostics plus artifact emission (report).
"""

__version__ = "0.1.0"

from .blur import BlurError, BlurKernel1D, BlurKernel2D, fit_rotation_kernel, fit_translation_kernel
from .core import (BlurMeanSign, ConfigError, ModelConfig, ModelKind,
                   ParticleEnsemble, eval_coefficients, load_config, parse_config)
from .engine import EngineError, SimOutput, build_histogram, classical_simulate, scaling_factors, simulate
from .moments import (MomentError, MomentSet, Poly2D, Variable,
                      solve_rotation_moments, translation_moment, verify_recursion)
from .oracle import (ClassicalLaw, DensityGrid, OracleError, StabilityError,
                     classical_density, compare_densities, empirical_density,
                     kramers_moyal_residual, particle_vs_pde, solve_truncated_fp)
from .report import (DistributionSummary, ReportError, ScatterData, VolProfile,
                     conditional_vol_profile, emit, final_distribution, step_scatter)

__all__ = [
    "__version__",
    "BlurError", "BlurKernel1D", "BlurKernel2D", "fit_rotation_kernel", "fit_translation_kernel",
    "BlurMeanSign", "ConfigError", "ModelConfig", "ModelKind",
    "ParticleEnsemble", "eval_coefficients", "load_config", "parse_config",
    "EngineError", "SimOutput", "build_histogram", "classical_simulate", "scaling_factors", "simulate",
    "MomentError", "MomentSet", "Poly2D", "Variable",
    "solve_rotation_moments", "translation_moment", "verify_recursion",
    "ClassicalLaw", "DensityGrid", "OracleError", "StabilityError",
    "classical_density", "compare_densities", "empirical_density",
    "kramers_moyal_residual", "particle_vs_pde", "solve_truncated_fp",
    "DistributionSummary", "ReportError", "ScatterData", "VolProfile",
    "conditional_vol_profile", "emit", "final_distribution", "step_scatter",
]
