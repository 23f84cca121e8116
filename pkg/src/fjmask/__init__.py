"""Friedkin-Johnsen opinion dynamics with a decaying-noise influence mask."""
from .attacker import (
    EstimateReport,
    KnowledgeSet,
    Observation,
    attack_agent,
    build_observations,
    identify_unmasked,
    mle_estimate,
    neighbor_opinions,
)
from .dynamics import (
    FjSystem,
    Trajectory,
    example1_system,
    is_stable,
    limit_opinions,
    load_system,
    random_fj_system,
    save_system,
    simulate,
    spectral_radius,
)
from .estimators import FJRegressionIdentifier, InfluenceMLE
from .exceptions import (
    FJError,
    InfeasibleError,
    InsufficientExcitationError,
    NumericalError,
    ParameterError,
    UnobservableAgentError,
    UnstableSystemError,
)
from .experiments import SweepConfig, SweepResult, run_sweep, run_trial, summarize
from .mask import MaskConfig, MaskedRun, NoiseSource, simulate_masked
from .metrics import InfoMatrix, estimate_error, information_matrix, nullspace_basis
from .network import Network, random_regular_network

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
