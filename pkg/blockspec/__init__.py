from .block_model import BlockStructure, EntryLaw, SampledMatrix, sample_matrix, validate
from .density import (
    RadialDensity,
    annulus_mass,
    cartesian_cross_check,
    cumulative_mass,
    density_grid,
    radial_cdf,
)
from .montecarlo import ComparisonReport, EmpiricalSpectrum, compare, run_trials, spectrum
from .reduced_matrices import ReducedPair, build_reduced, spectral_radius
from .stieltjes_solver import FixedPointSolution, SolverParams, solve, t_continuation
from .workers import Scope, threads

__all__ = [
    "BlockStructure",
    "ComparisonReport",
    "EmpiricalSpectrum",
    "EntryLaw",
    "FixedPointSolution",
    "RadialDensity",
    "ReducedPair",
    "SampledMatrix",
    "Scope",
    "SolverParams",
    "annulus_mass",
    "build_reduced",
    "cartesian_cross_check",
    "compare",
    "cumulative_mass",
    "density_grid",
    "radial_cdf",
    "run_trials",
    "sample_matrix",
    "solve",
    "spectral_radius",
    "spectrum",
    "t_continuation",
    "threads",
    "validate",
]
