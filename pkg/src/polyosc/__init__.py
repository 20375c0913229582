"""Desk-scale numerical lab for polyharmonic operators on oscillating boundaries.

The package assembles and solves generalized eigenvalue problems for
(-Laplacian)^m + I under strong intermediate boundary conditions on graph
domains with a fast-oscillating top boundary, computes the strange boundary
constant of the critical oscillation regime from the microscopic strip
problem, and numerically verifies the supporting calculus: product and
composition derivative formulas, polyharmonic boundary integration
identities, the periodic unfolding identity, and the explicit spectral
stability criterion.
"""

from .cell import CellConfig, strange_constant, verify_identities
from .experiments import ExperimentConfig, run_cell_report, run_trichotomy
from .geometry import (OscillatingProfile, Regime, TrigPolynomial,
                       classify_stability, criterion_rates)

__version__ = "0.1.0"

__all__ = [
    "CellConfig", "strange_constant", "verify_identities",
    "ExperimentConfig", "run_cell_report", "run_trichotomy",
    "OscillatingProfile", "Regime", "TrigPolynomial",
    "classify_stability", "criterion_rates",
    "__version__",
]
