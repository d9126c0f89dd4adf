"""Threshold scheduling for remote estimation against an eavesdropper."""

from ._core import (
    ChannelModel,
    EavesBracket,
    SecestError,
    SimResult,
    ThresholdSolution,
    __version__,
    analyze,
    eaves_bracket,
    objective_j,
    omega_distribution,
    oracle_check,
    phi_row,
    pi_distribution,
    reference_config,
    simulate_indices,
    solve_threshold,
    spectral_radius,
    steady_state_covariance,
)

__all__ = [
    "ChannelModel",
    "EavesBracket",
    "SecestError",
    "SimResult",
    "ThresholdSolution",
    "__version__",
    "analyze",
    "eaves_bracket",
    "objective_j",
    "omega_distribution",
    "oracle_check",
    "phi_row",
    "pi_distribution",
    "reference_config",
    "simulate_indices",
    "solve_threshold",
    "spectral_radius",
    "steady_state_covariance",
]
