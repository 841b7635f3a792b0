"""Decay-error bounds and optimal-control pulses for Rydberg-blockade
entanglement generation (units B = 1 throughout)."""

from .core import (
    BELL_TARGET,
    GG,
    RR,
    W_STATE,
    BipartiteState,
    ControlPulse,
    DegeneracyError,
    SchmidtForm,
    Trajectory,
    build_symmetric_hamiltonian,
    build_two_atom_hamiltonian,
    integrated_rydberg_time,
    min_entropy,
    min_entropy_rate,
    propagate,
    rydberg_population,
    schmidt_decompose,
    state_fidelity,
    trajectory_entropy_analysis,
    von_neumann_entropy,
)
from .bound import (
    OracleResult,
    eta_min,
    g_of_s,
    minimize_ratio_numeric,
    optimal_duration,
    sdot_optimal,
    vn_rate_bound_check,
    weak_bound_constants,
    weak_bound_f,
)

__version__ = "0.1.0"
