"""
Spectral density, radial density and cumulative mass on a radial grid.

Inside the support b_c = -z·psi_c(|z|²), so the density
-(1/pi)·sum_c alpha_c ∂_z b_c reduces to a derivative in u = |z|²:

    f(r) = (1/pi) · d/du [ u · sum_c alpha_c psi_c(u) ]   at u = r²

and the mass of the disk of radius R is exactly R² · sum_c alpha_c psi_c(R²).
`cartesian_cross_check` evaluates the same density by two-dimensional finite
differences of b, as an independent check of the radial route.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.integrate import cumulative_trapezoid

from .block_model import BlockStructure
from .errors import NoConvergence, NotConverged, SolverFailure
from .reduced_matrices import ReducedPair, build_reduced
from .stieltjes_solver import (
    FixedPointSolution,
    SolverParams,
    b_values,
    t_continuation_batch,
)
from .workers import map_chunks

__all__ = [
    "CHUNK_SIZE",
    "DEFAULT_GRID_POINTS",
    "CrossCheck",
    "RadialDensity",
    "annulus_mass",
    "cartesian_cross_check",
    "cumulative_mass",
    "density_grid",
    "radial_cdf",
    "solve_nodes",
    "trapezoid_mass",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

CHUNK_SIZE = 64
DEFAULT_GRID_POINTS = 513
MIN_GRID_POINTS = 9
NEGATIVE_DENSITY_TOL = 1e-8


@dataclass(frozen=True, slots=True, eq=False)
class RadialDensity:
    """The limiting density sampled on a grid uniform in u = r²."""

    r_grid: FloatArray
    u_grid: FloatArray

    f: FloatArray
    """Planar density per unit area, clamped to be non-negative."""

    p: FloatArray
    """Radial density 2·pi·r·f per unit radius."""

    M: FloatArray
    """Mass of the disk of radius r, non-decreasing, in [0, 1]."""

    radius: float
    """Support radius sqrt(rho(G)); the last grid node."""

    psi_grid: FloatArray
    """psi_c(u) with shape (D, grid length)."""

    @property
    def D(self) -> int:
        return self.psi_grid.shape[0]


@dataclass(frozen=True, slots=True)
class CrossCheck:
    """The density at one point, obtained by the Cartesian and radial routes."""

    z: complex
    f_cartesian: float
    f_radial: float
    abs_diff: float

    imag_part: float
    """Imaginary part of the Cartesian estimate; zero up to discretization."""


def solve_nodes(
    u_values: npt.ArrayLike,
    reduced: ReducedPair,
    params: SolverParams = SolverParams(),
) -> list[FixedPointSolution]:
    """
    The t -> 0 solution at every u, computed in fixed chunks of `CHUNK_SIZE`
    consecutive nodes that may run on several threads.

    The nodes of a chunk descend the t schedule together as one batch, each
    warm-started from its own previous level rather than from its neighbour
    at smaller u, so every node's result is independent of the chunking.

    A node that fails to converge raises `SolverFailure` with its index.
    """
    u = np.atleast_1d(np.asarray(u_values, dtype=np.float64))

    def solve_chunk(start: int, chunk: Sequence[float]) -> list[FixedPointSolution]:
        try:
            return t_continuation_batch(chunk, reduced, params)
        except NoConvergence as exc:
            node = start + (exc.index or 0)
            raise SolverFailure(
                f"Solver failed at grid node {node} (u={u[node]!r}, t={exc.t!r}).",
                node=node,
            ) from exc

    return map_chunks(solve_chunk, u, CHUNK_SIZE)


def _weighted_mass(u: FloatArray, alpha: FloatArray, psi: FloatArray) -> FloatArray:
    return u * (alpha @ psi)


def density_grid(
    structure: BlockStructure,
    grid_points: int = DEFAULT_GRID_POINTS,
    solver_params: SolverParams = SolverParams(),
) -> RadialDensity:
    """
    Density, radial density and cumulative mass on `grid_points` nodes
    uniform in u from 0 to rho(G) inclusive.

    d/du is taken by centered differences, one-sided at both ends.
    """
    if grid_points < MIN_GRID_POINTS:
        raise ValueError(
            f"grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}."
        )
    reduced = build_reduced(structure)
    u = np.linspace(0.0, reduced.pf_value, grid_points)
    solutions = solve_nodes(u, reduced, solver_params)
    psi = np.stack([solution.psi for solution in solutions], axis=1)

    weighted = _weighted_mass(u, reduced.alpha, psi)
    f = np.gradient(weighted, u, edge_order=1) / math.pi
    most_negative = float(f.min())
    if most_negative < -NEGATIVE_DENSITY_TOL:
        logger.debug("density dips to %.3e before clamping", most_negative)
    f = np.maximum(f, 0.0)

    r = np.sqrt(u)
    M = np.maximum.accumulate(np.clip(weighted, 0.0, 1.0))
    logger.debug(
        "density grid: D=%d nodes=%d radius=%r mass at edge=%r",
        reduced.D,
        grid_points,
        reduced.radius,
        float(M[-1]),
    )
    return RadialDensity(
        r_grid=r,
        u_grid=u,
        f=f,
        p=2.0 * math.pi * r * f,
        M=M,
        radius=reduced.radius,
        psi_grid=psi,
    )


def cumulative_mass(solution: FixedPointSolution, structure: BlockStructure) -> float:
    """Mass of the disk of radius sqrt(solution.u): u · sum_c alpha_c psi_c(u)."""
    if not solution.converged:
        raise NotConverged(f"The solution at u={solution.u!r} did not converge.")
    alpha = structure.alpha_array
    if alpha.shape[0] != solution.D:
        raise ValueError(
            f"Solution has {solution.D} blocks but the structure has {alpha.shape[0]}."
        )
    return float(np.clip(solution.u * float(alpha @ solution.psi), 0.0, 1.0))


def radial_cdf(
    structure: BlockStructure,
    radii: npt.ArrayLike,
    solver_params: SolverParams = SolverParams(),
) -> FloatArray:
    """Disk masses M(r) at arbitrary radii; radii at or past the support give 1."""
    r = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise ValueError("Radii must be finite and non-negative.")
    reduced = build_reduced(structure)
    masses = np.ones_like(r)
    inside = r < reduced.radius
    if inside.any():
        solutions = solve_nodes(r[inside] ** 2, reduced, solver_params)
        masses[inside] = [cumulative_mass(s, structure) for s in solutions]
    return masses


def annulus_mass(
    structure: BlockStructure,
    r1: float,
    r2: float,
    solver_params: SolverParams = SolverParams(),
) -> float:
    """Mass of the annulus r1 <= |z| <= r2."""
    if not 0 <= r1 <= r2:
        raise ValueError(f"Need 0 <= r1 <= r2, got r1={r1!r}, r2={r2!r}.")
    radius = build_reduced(structure).radius
    r1, r2 = min(r1, radius), min(r2, radius)
    if r1 == r2:
        return 0.0
    inner, outer = radial_cdf(structure, [r1, r2], solver_params)
    return float(outer - inner)


def trapezoid_mass(radial: RadialDensity) -> FloatArray:
    """Cumulative trapezoidal integral of p over r, starting from 0."""
    return cumulative_trapezoid(radial.p, radial.r_grid, initial=0.0)


def cartesian_cross_check(
    structure: BlockStructure,
    z_list: Sequence[complex],
    step: float,
    solver_params: SolverParams = SolverParams(),
    *,
    radial: RadialDensity | None = None,
) -> list[CrossCheck]:
    """
    Evaluate -(1/pi)·∂_z sum_c alpha_c b_c with ∂_z = (∂_x - i·∂_y)/2 by
    centered differences of spacing `step`, and compare against the radial
    density interpolated at |z|².

    `radial` defaults to `density_grid(structure, solver_params=...)`.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}.")
    reduced = build_reduced(structure)
    zs = np.asarray([complex(z) for z in z_list], dtype=np.complex128)
    if np.any(np.abs(zs) >= reduced.radius - 2 * step):
        raise ValueError("Every check point must satisfy |z| < radius - 2·step.")
    if radial is None:
        radial = density_grid(structure, solver_params=solver_params)

    offsets = np.array([step, -step, 1j * step, -1j * step])
    points = (zs[:, None] + offsets[None, :]).ravel()
    solutions = solve_nodes(np.abs(points) ** 2, reduced, solver_params)
    sums = np.array(
        [reduced.alpha @ b_values(s, p) for s, p in zip(solutions, points)]
    ).reshape(-1, 4)

    d_x = (sums[:, 0] - sums[:, 1]) / (2 * step)
    d_y = (sums[:, 2] - sums[:, 3]) / (2 * step)
    f_cartesian = -0.5 * (d_x - 1j * d_y) / math.pi
    f_radial = np.interp(np.abs(zs) ** 2, radial.u_grid, radial.f)

    return [
        CrossCheck(
            z=complex(z),
            f_cartesian=float(fc.real),
            f_radial=float(fr),
            abs_diff=abs(float(fc.real) - float(fr)),
            imag_part=float(fc.imag),
        )
        for z, fc, fr in zip(zs, f_cartesian, f_radial)
    ]
