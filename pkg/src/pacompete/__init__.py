"""Two-type preferential attachment with type-assignment rules and fitness.

Modules
-------
analysis
    Competition functions, their zeros and stability thresholds.
sim
    Graph-level simulation with invariant checks and exact drift.
urn
    Aggregate urn fast path and exact small-instance enumeration.
experiments
    Ensembles, domination classification, parameter scans, Lyapunov checks.
cli
    ``pacompete`` command-line front end.
"""

__version__ = "0.1.0"

from .analysis import (
    Additive,
    Multiplicative,
    Plain,
    TypeAssignment,
    analysis_report,
    competition_function,
    endpoint_thresholds,
    find_zeros,
    locate_transition,
)
from .experiments import DominationRule, classify_domination, phase_scan, run_ensemble
from .sim import InitialGraph, SimConfig, run
from .urn import enumerate_exact, run_urn

__all__ = [
    "Additive",
    "Multiplicative",
    "Plain",
    "TypeAssignment",
    "analysis_report",
    "competition_function",
    "endpoint_thresholds",
    "find_zeros",
    "locate_transition",
    "DominationRule",
    "classify_domination",
    "phase_scan",
    "run_ensemble",
    "InitialGraph",
    "SimConfig",
    "run",
    "enumerate_exact",
    "run_urn",
]
