"""Numerical routes to the Douglas energy of boundary data on the unit sphere."""

from .clifford import Multivector, embed_paravector, mv_conj, mv_mul, mv_parts
from .energy import EnergyConfig, EnergyReport, emit_report, energy_report
from .harmonics import BoundaryFunction, SpectralCoefficients, harmonic_basis, project, synthesize

__all__ = [
    "BoundaryFunction",
    "EnergyConfig",
    "EnergyReport",
    "Multivector",
    "SpectralCoefficients",
    "emit_report",
    "embed_paravector",
    "energy_report",
    "harmonic_basis",
    "mv_conj",
    "mv_mul",
    "mv_parts",
    "project",
    "synthesize",
]
