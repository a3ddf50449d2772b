"""Adiabaticity of a driven qubit pair and the non-transitional evolution of its parts."""
from .dynamics import Trajectory, evolve_mixed, evolve_pure, propagator, recommended_n_steps
from .errors import (
    CoupledAdiabaticError,
    DegenerateGap,
    DegenerateLabeling,
    DimensionMismatch,
    FrameMismatch,
    InsufficientSamples,
    InvalidParameter,
    LabelAmbiguityWarning,
    NonHermitian,
    NonPhysical,
    NotCyclicWarning,
    StepTooLarge,
    UnsupportedModel,
)
from .model import CouplingKind, LoopSpec, ModelSpec, hamiltonian_at, hamiltonian_derivative_at
from .phases import berry_phase, geometric_phase, geometric_phase_perturbative, phase_report
from .regimes import Regime, RegimeLabel, RegimeThresholds, classify, evaluate_mixed, evaluate_pure
from .schmidt import (
    nontransitional_ratios,
    open_system_ratio,
    rate_equation_residual,
    reduced_density_eigen,
    schmidt_decompose,
    schmidt_series,
)
from .spectra import frames_along, gamma_matrix, gamma_metric, gamma_surface, numeric_eigensystem

__version__ = "0.1.0"
