"""Polarization purity of two-crystal SPDC pairs as a probe of pump spatial correlations."""

from .analysis import CurveFeatures, FitResult, curve_features, fit_visibility, load_curve, nonmonotonicity, write_curve
from .crystal import CrystalSetup, KConvention, PhaseCoefficients, delta_k, phase_coefficients, phase_profile
from .pump import (
    AngularSpectrum,
    GridSpec,
    PumpProfile,
    SpotConvention,
    angular_spectrum,
    autocorrelation,
    dump_pump,
    gaussian_pump,
    grid_pump,
    load_pump,
)
from .purity import (
    CouplingWindow,
    MixingModel,
    Numerics,
    Scenario,
    VisibilityCurve,
    WindowShape,
    coherence_term,
    density_matrix,
    purity_via_wk,
    scan_alpha,
    scan_beta,
    state_purity,
)
from .slm import MaskMode, PhaseParams, SlmConfig

__version__ = "0.1.0"
