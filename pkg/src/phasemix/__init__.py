"""Phase-mixed photocurrent statistics for two-mode sideband states.

Simulate Gaussian and engineered non-Gaussian sideband states, measure them
with homodyne or resonator detection, mix the detection phase, and test the
resulting photocurrent moments against their Gaussian values.
"""

from .config import ConfigError, RunConfig, load_config
from .dataset import Dataset, read_dataset, write_dataset
from .dsp import DemodConfig, synthesize_and_demodulate
from .masquerade import build_masquerade_state
from .measurement import HD, RD, Explicit, predicted_component_stats, state_component_stats
from .moments import (ComponentStats, dnk_coefficient, fourth_order_identity_residual,
                      higher_order_constraint_residual, mixed_moment_from_components)
from .pipeline import PipelineError, run_pipeline
from .simulate import (Locked, RandomWalk, UniformPerSample, detuning_scan, hd_phase_scan,
                       sample_beam_pair, simulate_stream)
from .states import (ComponentGaussianState, EngineeredState, GaussianMixtureState, GaussianState,
                     TwoModeCovariance, basis_change, symmetric_covariance)

__version__ = "0.1.0"

__all__ = [
    "ComponentGaussianState", "ComponentStats", "ConfigError", "Dataset", "DemodConfig", "EngineeredState",
    "Explicit", "GaussianMixtureState", "GaussianState", "HD", "Locked", "PipelineError", "RD",
    "RandomWalk", "RunConfig", "TwoModeCovariance", "UniformPerSample", "basis_change",
    "build_masquerade_state", "detuning_scan", "dnk_coefficient", "fourth_order_identity_residual",
    "hd_phase_scan", "higher_order_constraint_residual", "load_config", "mixed_moment_from_components",
    "predicted_component_stats", "read_dataset", "run_pipeline", "sample_beam_pair", "simulate_stream",
    "state_component_stats", "symmetric_covariance", "synthesize_and_demodulate", "write_dataset",
]
