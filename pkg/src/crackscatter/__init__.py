"""Lattice-wave scattering by two staggered semi-infinite cracks.

Semi-analytic Wiener-Hopf pipeline (asymptotic matrix-kernel factorization,
stationary-phase far fields) cross-validated against a sparse direct solve
on a finite absorbing grid.
"""

from .lattice import (
    BranchCutError,
    ComplexFrequency,
    ConvergenceError,
    CrackGeometry,
    IncidentWave,
    LatticeSymbols,
    PassBandError,
    branch_points,
    delta_plus,
    incident_cod,
    solve_wavenumber,
    symbol_Q,
)

__version__ = "0.1.0"
