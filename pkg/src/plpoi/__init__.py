"""Low-PAPR OFDM-ISAC waveform design with phase-difference constraints.

The designed spectrum keeps every subcarrier unimodular and within a phase
window of its QPSK payload, and is found with an ADMM solver that caps the
PAPR of an auxiliary time-domain copy.
"""

from .admm import SolverConfig, SolveResult, solve, solve_batch
from .comm import ber_montecarlo, ber_theory_awgn, ber_theory_rayleigh
from .estimators import PLPOIDesigner, PlainOFDMDesigner, WeightedBaselineDesigner, make_designer
from .exceptions import ConfigError, DegenerateWarning, DimensionError, DomainError
from .sensing import RadarParams, TargetSpec, ambiguity, range_doppler, range_profile, synth_echo
from .spectral import TransformPlan, analyze_freq, papr, papr_db, synthesize_time, wrap_phase
from .waveform import modulate_qpsk, pd_project, radar_reference

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateWarning",
    "DimensionError",
    "DomainError",
    "PLPOIDesigner",
    "PlainOFDMDesigner",
    "RadarParams",
    "SolveResult",
    "SolverConfig",
    "TargetSpec",
    "TransformPlan",
    "WeightedBaselineDesigner",
    "ambiguity",
    "analyze_freq",
    "ber_montecarlo",
    "ber_theory_awgn",
    "ber_theory_rayleigh",
    "make_designer",
    "modulate_qpsk",
    "papr",
    "papr_db",
    "pd_project",
    "radar_reference",
    "range_doppler",
    "range_profile",
    "solve",
    "solve_batch",
    "synth_echo",
    "synthesize_time",
    "wrap_phase",
]
