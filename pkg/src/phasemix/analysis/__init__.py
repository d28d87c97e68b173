"""Statistical analysis of phase-mixed photocurrent datasets."""

from .estimators import (MomentEstimate, MomentEstimates, combine_two_beams, correct_gaussian_background,
                         estimate_moments)
from .fitting import MixedGaussianFit, fit_phase_mixed_gaussian, mixed_gaussian_goodness_of_fit
from .normality import ShapiroWilkResult, shapiro_wilk
from .reconstruct import RankDeficientScanError, ReconstructionResult, reconstruct_symmetric_covariance
from .report import (AsymmetryEstimate, GaussianityReport, format_uncertainty, gaussianity_report,
                     infer_asymmetry)

__all__ = [
    "AsymmetryEstimate", "GaussianityReport", "MixedGaussianFit", "MomentEstimate", "MomentEstimates",
    "RankDeficientScanError", "ReconstructionResult", "ShapiroWilkResult", "combine_two_beams",
    "correct_gaussian_background", "estimate_moments", "fit_phase_mixed_gaussian", "format_uncertainty",
    "gaussianity_report", "infer_asymmetry", "mixed_gaussian_goodness_of_fit",
    "reconstruct_symmetric_covariance", "shapiro_wilk",
]
