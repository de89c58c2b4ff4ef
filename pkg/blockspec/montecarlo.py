"""
Finite-N spectra of the model and their comparison with the limiting law.

Trials are independent jobs keyed by their trial index, so they run on
several threads (see `blockspec.workers`) without affecting the result.
"""

import logging
import math
import typing as t
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
import numpy.typing as npt
from scipy import linalg, stats

from .block_model import BlockStructure, SampledMatrix, sample_matrix, validate
from .density import RadialDensity, radial_cdf
from .errors import EigensolverFailure
from .reduced_matrices import build_reduced
from .stieltjes_solver import SolverParams
from .workers import map_chunks

__all__ = [
    "ANGULAR_BINS",
    "DEFAULT_BINS",
    "BinComparison",
    "ComparisonReport",
    "EmpiricalSpectrum",
    "angular_uniformity",
    "compare",
    "outlier_fraction",
    "real_axis_fraction",
    "run_trials",
    "sample_limit_law",
    "spectrum",
]

logger = logging.getLogger(__name__)

type ComplexArray = npt.NDArray[np.complex128]

DEFAULT_BINS = 50
HISTOGRAM_SPAN = 1.2
ANGULAR_BINS = 36
OUTLIER_FACTOR = 1.1
MIN_N = 10


@dataclass(frozen=True, slots=True, eq=False)
class EmpiricalSpectrum:
    """Eigenvalues of every trial, in trial order, with a radial histogram."""

    eigenvalues: ComplexArray
    N: int
    trials: int
    seed: int

    empirical_radius: float
    """Largest eigenvalue modulus."""

    bins: npt.NDArray[np.float64]
    """Edges of the uniform radial bins over [0, 1.2·radius]."""

    counts: npt.NDArray[np.int64]
    """Eigenvalues per bin; moduli past the last edge land in the last bin."""

    @classmethod
    def from_eigenvalues(
        cls,
        eigenvalues: npt.ArrayLike,
        *,
        N: int,
        trials: int,
        seed: int,
        radius: float,
        bins: int = DEFAULT_BINS,
    ) -> t.Self:
        values = np.asarray(eigenvalues, dtype=np.complex128).ravel()
        if values.size != N * trials:
            raise ValueError(f"Expected {N * trials} eigenvalues, got {values.size}.")
        if bins < 1:
            raise ValueError(f"bins must be positive, got {bins}.")
        moduli = np.abs(values)
        edges = np.linspace(0.0, HISTOGRAM_SPAN * radius, bins + 1)
        counts, _ = np.histogram(np.minimum(moduli, edges[-1]), bins=edges)
        return cls(
            eigenvalues=values,
            N=N,
            trials=trials,
            seed=seed,
            empirical_radius=float(moduli.max()) if values.size else 0.0,
            bins=edges,
            counts=counts.astype(np.int64),
        )

    @property
    def trial_labels(self) -> npt.NDArray[np.int64]:
        """Trial index of every eigenvalue."""
        return np.repeat(np.arange(self.trials, dtype=np.int64), self.N)


@dataclass(frozen=True, slots=True)
class BinComparison:
    r_lo: float
    r_hi: float
    empirical_mass: float
    theory_mass: float
    diff: float


@dataclass(frozen=True, slots=True)
class ComparisonReport:
    """Agreement between an empirical spectrum and the limiting radial law."""

    N: int
    trials: int
    seed: int
    radius: float
    empirical_radius: float

    ks_radial: float
    """Largest gap between the empirical radial CDF and M over the bin edges."""

    radius_rel_err: float
    outlier_fraction: float
    angular_chi2: float
    angular_pvalue: float
    per_bin: tuple[BinComparison, ...]

    def to_dict(self) -> dict[str, object]:
        return asdict(self)


def spectrum(matrix: SampledMatrix | npt.ArrayLike) -> ComplexArray:
    """All eigenvalues of a dense square matrix, in LAPACK's order."""
    entries = matrix.entries if isinstance(matrix, SampledMatrix) else np.asarray(matrix)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {entries.shape}.")
    if not np.all(np.isfinite(entries)):
        raise ValueError("Matrix entries must be finite.")
    try:
        values = linalg.eigvals(entries, check_finite=False)
    except linalg.LinAlgError as exc:
        raise EigensolverFailure(
            f"Eigenvalue computation failed for a {entries.shape[0]}×{entries.shape[0]} matrix."
        ) from exc
    return values.astype(np.complex128, copy=False)


def run_trials(
    structure: BlockStructure,
    N: int,
    trials: int,
    seed: int,
    *,
    bins: int = DEFAULT_BINS,
) -> EmpiricalSpectrum:
    """Spectra of `sample_matrix(structure, N, seed, k)` for k = 0..trials-1."""
    validate(structure)
    if N < MIN_N:
        raise ValueError(f"N must be at least {MIN_N}, got {N}.")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}.")
    radius = build_reduced(structure).radius

    def run_chunk(start: int, indices: Sequence[int]) -> list[ComplexArray]:
        spectra = []
        for k in indices:
            spectra.append(spectrum(sample_matrix(structure, N, seed, k)))
            logger.debug("trial %d of %d done (N=%d)", k + 1, trials, N)
        return spectra

    spectra = map_chunks(run_chunk, range(trials), 1)
    return EmpiricalSpectrum.from_eigenvalues(
        np.concatenate(spectra),
        N=N,
        trials=trials,
        seed=seed,
        radius=radius,
        bins=bins,
    )


def _values(empirical: EmpiricalSpectrum | npt.ArrayLike) -> ComplexArray:
    if isinstance(empirical, EmpiricalSpectrum):
        return empirical.eigenvalues
    return np.asarray(empirical, dtype=np.complex128).ravel()


def angular_uniformity(
    empirical: EmpiricalSpectrum | npt.ArrayLike, bins: int = ANGULAR_BINS
) -> tuple[float, float]:
    """Chi-square statistic and p-value of the eigenvalue arguments against uniform."""
    counts, _ = np.histogram(np.angle(_values(empirical)), bins=bins, range=(-math.pi, math.pi))
    result = stats.chisquare(counts)
    return float(result.statistic), float(result.pvalue)


def real_axis_fraction(
    empirical: EmpiricalSpectrum | npt.ArrayLike, atol: float = 1e-8
) -> float:
    """Fraction of eigenvalues within `atol` of the real axis."""
    values = _values(empirical)
    return float(np.mean(np.abs(values.imag) <= atol))


def outlier_fraction(
    empirical: EmpiricalSpectrum | npt.ArrayLike,
    radius: float,
    factor: float = OUTLIER_FACTOR,
) -> float:
    """Fraction of eigenvalues with modulus above factor·radius."""
    values = _values(empirical)
    return float(np.mean(np.abs(values) > factor * radius))


def compare(
    empirical: EmpiricalSpectrum,
    structure: BlockStructure,
    solver_params: SolverParams = SolverParams(),
) -> ComparisonReport:
    """
    Compare the empirical radial distribution with the limiting disk masses
    M(r) evaluated at the histogram edges.
    """
    values = empirical.eigenvalues
    if values.size == 0:
        raise ValueError("Cannot compare an empty spectrum.")
    radius = build_reduced(structure).radius
    edges = empirical.bins
    theory = radial_cdf(structure, edges, solver_params)

    moduli = np.sort(np.abs(values))
    empirical_cdf = np.searchsorted(moduli, edges, side="right") / moduli.size
    ks = float(np.max(np.abs(empirical_cdf - theory)))

    empirical_mass = empirical.counts / empirical.counts.sum()
    theory_mass = np.diff(theory)
    per_bin = tuple(
        BinComparison(
            r_lo=float(edges[k]),
            r_hi=float(edges[k + 1]),
            empirical_mass=float(empirical_mass[k]),
            theory_mass=float(theory_mass[k]),
            diff=float(empirical_mass[k] - theory_mass[k]),
        )
        for k in range(edges.size - 1)
    )
    chi2, pvalue = angular_uniformity(values)
    return ComparisonReport(
        N=empirical.N,
        trials=empirical.trials,
        seed=empirical.seed,
        radius=radius,
        empirical_radius=empirical.empirical_radius,
        ks_radial=min(ks, 1.0),
        radius_rel_err=abs(empirical.empirical_radius - radius) / radius,
        outlier_fraction=outlier_fraction(values, radius),
        angular_chi2=chi2,
        angular_pvalue=pvalue,
        per_bin=per_bin,
    )


def sample_limit_law(radial: RadialDensity, size: int, seed: int) -> ComplexArray:
    """
    Draw `size` points from the limiting law: radii by inverting M on the
    grid, arguments uniform on [0, 2·pi).
    """
    if size < 1:
        raise ValueError(f"size must be positive, got {size}.")
    rng = np.random.Generator(np.random.Philox(key=seed))
    levels = rng.uniform(0.0, 1.0, size)
    angles = rng.uniform(0.0, 2.0 * math.pi, size)
    radii = np.interp(levels, radial.M, radial.r_grid)
    return radii * np.exp(1j * angles)
