"""
Threshold effect of ML delay estimation viewed as a random energy model.

Submodules: ``model`` (parameters, pulse, config files), ``slepian`` (law of
the per-cell correlation maximum), ``analytic`` (free energies and phase
diagrams), ``bounds`` (error exponents, Weiss-Weinstein bound), ``simulate``
(Monte Carlo of the partition function and ML estimates), ``experiments``
(sweeps and reports) and ``cli``.
"""

__version__ = "0.1.0"

from .model import (
    Boundary,
    DomainError,
    GridSpec,
    PhaseLabel,
    RectangularPulse,
    RunConfig,
    SystemParams,
    autocorrelation,
    validate,
)
from .analytic import (
    PsiBreakdown,
    beta_c,
    classify_phase_joint,
    classify_phase_single,
    mismatch_transform,
    phase_boundaries_joint,
    phase_boundaries_single,
    psi_a_joint,
    psi_a_single,
    psi_joint,
    psi_single,
)
from .slepian import SlepianTable, slepian_cdf, slepian_pdf
from .bounds import BoundsConfig, error_exponent, ml_mse_exponent, wwb, wwb_exponent
from .simulate import mc_run, run_trial
from .experiments import SweepSpec, compare_bounds, sweep_psi, sweep_threshold, validate_slepian
