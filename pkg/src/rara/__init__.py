"""Relay-aided random access: analysis, simulation, and multipacket reception."""

from .analytic import (
    PerformanceMetrics,
    SessionKind,
    StationaryDistribution,
    SystemParams,
    asymptotic_throughput,
    outage_approx,
    outage_exact,
    stationary_closed_form,
    stationary_power_iteration,
    throughput_approx,
    throughput_exact,
    transition_matrix,
)
from .sim import FinitePopulation, PoissonProcess, SimConfig, SimReport, run, sweep

__all__ = [
    "PerformanceMetrics",
    "SessionKind",
    "StationaryDistribution",
    "SystemParams",
    "asymptotic_throughput",
    "outage_approx",
    "outage_exact",
    "stationary_closed_form",
    "stationary_power_iteration",
    "throughput_approx",
    "throughput_exact",
    "transition_matrix",
    "FinitePopulation",
    "PoissonProcess",
    "SimConfig",
    "SimReport",
    "run",
    "sweep",
]

__version__ = "0.1.0"
