"""Stability and Hopf-bifurcation toolkit for Compound TCP fluid models."""

from .equilibrium import EquilibriumPoint, solve_equilibrium
from .linear import (
    CrossingResult,
    LinearCoefficients,
    crossing_frequency,
    hopf_locate_two_delay,
    kappa_critical_closed_form,
    linearize,
    scenario1_conditions,
    stability_chart,
    transversality,
)
from .normalform import HopfMetrics, analyze_hopf, taylor_expand
from .protocol import ProtocolParams, compound_decrease, compound_increase
from .topology import CaseIConfig, CaseIIConfig, CaseIIIConfig, loss_mm1b

__all__ = [
    "CaseIConfig",
    "CaseIIConfig",
    "CaseIIIConfig",
    "CrossingResult",
    "EquilibriumPoint",
    "HopfMetrics",
    "LinearCoefficients",
    "ProtocolParams",
    "analyze_hopf",
    "compound_decrease",
    "compound_increase",
    "crossing_frequency",
    "hopf_locate_two_delay",
    "kappa_critical_closed_form",
    "linearize",
    "loss_mm1b",
    "scenario1_conditions",
    "solve_equilibrium",
    "stability_chart",
    "taylor_expand",
    "transversality",
]
