"""Linearized quantum fluctuations of the bright cavity soliton of a degenerate OPO.

Squeezing and intensity spectra from a biorthonormal mode expansion of the
fluctuation operator, soliton drift diffusion, and a stochastic oracle that
integrates the same linear Langevin equations on the grid.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CavSqueezeError,
    ClassificationError,
    DegeneratePairingError,
    ExistenceError,
    InsufficientDataError,
    InvalidArgumentError,
    NoCrossingError,
    NonStationaryError,
    NumericalError,
    ResolutionError,
)
from .model import FluctuationField, Grid1D, ModelParams, frequency_axis, make_grid, scalar_product  # noqa: E402
from .soliton import SolitonProfile, classify_region, soliton_profile  # noqa: E402
from .linop import (  # noqa: E402
    EigenSystem,
    alpha0,
    analytic_modes_mu1,
    build_operators,
    eigensystem,
    find_hopf_threshold,
)
from .spectra import (  # noqa: E402
    DetectorWindow,
    SpectrumResult,
    drift_diffusion,
    intensity_spectrum,
    modal_diffusion,
    modal_spectrum,
    optimize_lof_phase,
    squeezing_spectrum,
    squeezing_spectrum_detector,
)
from .lof import LofSpec, gh_width_scan, render_lof  # noqa: E402
from .pipeline import analyze, analyze_point  # noqa: E402
from .estimator import SolitonSqueezing  # noqa: E402
