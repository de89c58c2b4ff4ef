import cmath
import math
import time

import numpy as np
import pytest

from .block_model import BlockStructure
from .density import (
    annulus_mass,
    cartesian_cross_check,
    cumulative_mass,
    density_grid,
    radial_cdf,
    trapezoid_mass,
)
from .errors import NoConvergence, NotConverged, SolverFailure
from .reduced_matrices import build_reduced
from .stieltjes_solver import SolverParams, solve, t_continuation

CIRCULAR = BlockStructure.from_arrays([1.0], [[1.0]])
TWO_BLOCKS = BlockStructure.from_arrays([0.3, 0.7], [[1, 2], [3, 4]])
THREE_BLOCKS = BlockStructure.from_arrays(
    [0.25, 0.30, 0.45], [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
)


@pytest.fixture(scope="module")
def circular():
    return density_grid(CIRCULAR)


@pytest.fixture(scope="module")
def two_blocks():
    return density_grid(TWO_BLOCKS)


@pytest.fixture(scope="module")
def three_blocks():
    return density_grid(THREE_BLOCKS)


class TestDensityGrid:
    def test_circular_law_is_flat(self, circular):
        np.testing.assert_allclose(circular.f[:-2], 1 / math.pi, atol=1e-3)
        assert circular.radius == 1.0
        assert circular.M[0] == 0.0
        assert circular.M[-1] == pytest.approx(1.0, abs=1e-3)

    def test_grid_layout(self, circular):
        assert circular.u_grid.shape == (513,)
        assert circular.u_grid[0] == 0.0
        assert circular.u_grid[-1] == 1.0
        np.testing.assert_array_equal(circular.r_grid, np.sqrt(circular.u_grid))
        assert np.all(np.diff(circular.r_grid) > 0)
        assert circular.psi_grid.shape == (1, 513)

    def test_radial_density_is_2_pi_r_f(self, two_blocks):
        np.testing.assert_array_equal(
            two_blocks.p, 2.0 * math.pi * two_blocks.r_grid * two_blocks.f
        )

    def test_scaled_circular_law(self):
        radial = density_grid(BlockStructure.from_arrays([1.0], [[2.0]]), 65)
        assert radial.radius == pytest.approx(2.0, abs=1e-14)
        np.testing.assert_allclose(radial.f[:-2], 1 / (4 * math.pi), atol=1e-3)

    @pytest.mark.parametrize("fixture", ["two_blocks", "three_blocks"])
    def test_mass_normalization(self, fixture, request):
        radial = request.getfixturevalue(fixture)
        assert np.all(radial.f >= 0)
        assert np.all(np.diff(radial.M) >= 0)
        assert radial.M[0] == 0.0
        assert radial.M[-1] == pytest.approx(1.0, abs=1e-3)

    def test_two_block_radius(self, two_blocks):
        assert two_blocks.radius == pytest.approx(3.4430, abs=1e-4)

    @pytest.mark.parametrize("fixture", ["circular", "two_blocks", "three_blocks"])
    def test_mass_matches_trapezoid_integral(self, fixture, request):
        radial = request.getfixturevalue(fixture)
        assert np.max(np.abs(trapezoid_mass(radial) - radial.M)) < 1e-3

    def test_grid_refinement(self, two_blocks):
        coarse = density_grid(TWO_BLOCKS, 257)
        shared = two_blocks.f[::2]
        np.testing.assert_array_equal(two_blocks.u_grid[::2], coarse.u_grid)
        np.testing.assert_allclose(coarse.f[5:-5], shared[5:-5], atol=1e-4)

    def test_permuting_blocks_changes_nothing(self):
        radial = density_grid(THREE_BLOCKS, 33)
        permuted = density_grid(THREE_BLOCKS.permuted([2, 0, 1]), 33)
        np.testing.assert_allclose(permuted.f, radial.f, rtol=0, atol=1e-10)
        np.testing.assert_allclose(permuted.M, radial.M, rtol=0, atol=1e-10)

    def test_circular_grid_is_fast(self):
        start = time.perf_counter()
        radial = density_grid(CIRCULAR)
        assert time.perf_counter() - start < 5.0
        np.testing.assert_allclose(radial.f[:-2], 1 / math.pi, atol=1e-3)

    def test_rejects_small_grids(self):
        with pytest.raises(ValueError):
            density_grid(CIRCULAR, 8)

    def test_solver_failure_reports_node(self):
        with pytest.raises(SolverFailure) as excinfo:
            density_grid(CIRCULAR, 9, SolverParams(max_iter=5))
        assert excinfo.value.node == 0
        assert isinstance(excinfo.value.__cause__, NoConvergence)


class TestCumulativeMass:
    @pytest.mark.parametrize(
        ("R", "expected"), [(0.0, 0.0), (0.5, 0.25), (0.9, 0.81)]
    )
    def test_circular_law(self, R, expected):
        solution = t_continuation(R**2, build_reduced(CIRCULAR))
        assert cumulative_mass(solution, CIRCULAR) == pytest.approx(expected, abs=1e-5)

    @pytest.mark.parametrize("structure", [TWO_BLOCKS, THREE_BLOCKS])
    def test_full_disk(self, structure):
        reduced = build_reduced(structure)
        solution = t_continuation(reduced.pf_value, reduced)
        assert cumulative_mass(solution, structure) == pytest.approx(1.0, abs=1e-3)

    def test_outside_the_support_is_one(self):
        solution = t_continuation(4.0, build_reduced(CIRCULAR))
        assert cumulative_mass(solution, CIRCULAR) == pytest.approx(1.0, abs=1e-6)

    def test_requires_convergence(self):
        solution = solve(
            0.5, 1e-3, build_reduced(CIRCULAR), SolverParams(max_iter=1),
            raise_on_failure=False,
        )
        assert not solution.converged
        with pytest.raises(NotConverged):
            cumulative_mass(solution, CIRCULAR)

    def test_rejects_mismatched_structure(self):
        solution = t_continuation(0.5, build_reduced(CIRCULAR))
        with pytest.raises(ValueError):
            cumulative_mass(solution, TWO_BLOCKS)


class TestRadialCdf:
    def test_matches_density_grid(self, two_blocks):
        nodes = two_blocks.r_grid[:-1:16]
        np.testing.assert_allclose(
            radial_cdf(TWO_BLOCKS, nodes), two_blocks.M[:-1:16], rtol=0, atol=1e-9
        )

    def test_past_the_support(self):
        masses = radial_cdf(CIRCULAR, [1.0, 1.5, 10.0])
        assert masses.tolist() == [1.0, 1.0, 1.0]

    def test_non_decreasing(self):
        masses = radial_cdf(THREE_BLOCKS, np.linspace(0, 8, 17))
        assert np.all(np.diff(masses) >= 0)

    @pytest.mark.parametrize("radii", [[-0.1], [math.nan]])
    def test_rejects_bad_radii(self, radii):
        with pytest.raises(ValueError):
            radial_cdf(CIRCULAR, radii)


class TestAnnulusMass:
    def test_circular_law_annulus(self):
        assert annulus_mass(CIRCULAR, 0.3, 0.6) == pytest.approx(0.27, abs=1e-3)

    def test_whole_disk(self):
        radius = build_reduced(TWO_BLOCKS).radius
        assert annulus_mass(TWO_BLOCKS, 0.0, radius) == pytest.approx(1.0, abs=1e-3)

    def test_empty_annulus(self):
        assert annulus_mass(TWO_BLOCKS, 1.2, 1.2) == 0.0

    def test_radii_are_clamped_to_the_support(self):
        assert annulus_mass(CIRCULAR, 0.5, 5.0) == pytest.approx(0.75, abs=1e-5)
        assert annulus_mass(CIRCULAR, 2.0, 5.0) == 0.0

    def test_rejects_reversed_radii(self):
        with pytest.raises(ValueError):
            annulus_mass(CIRCULAR, 0.6, 0.3)


class TestCartesianCrossCheck:
    def test_circular_law(self, circular):
        (check,) = cartesian_cross_check(CIRCULAR, [0.3 + 0.4j], 1e-3, radial=circular)
        assert check.z == 0.3 + 0.4j
        assert check.f_cartesian == pytest.approx(1 / math.pi, abs=1e-4)
        assert check.abs_diff < 1e-3

    def test_rotation_invariance(self, two_blocks):
        z = 1.1 + 0.7j
        rotated = [z * cmath.exp(1j * theta) for theta in (0.0, 0.4, 1.9, 3.0, 5.5)]
        checks = cartesian_cross_check(TWO_BLOCKS, rotated, 1e-3, radial=two_blocks)
        values = [check.f_cartesian for check in checks]
        assert max(values) - min(values) < 1e-6

    def test_agrees_with_radial_route(self, two_blocks):
        zs = [
            r * cmath.exp(1j * theta)
            for r, theta in zip(
                np.linspace(0.2, 3.0, 10), np.linspace(0.0, 2 * math.pi, 10, endpoint=False)
            )
        ]
        zs[3] = 1.0
        checks = cartesian_cross_check(TWO_BLOCKS, zs, 1e-3, radial=two_blocks)
        assert len(checks) == 10
        for check in checks:
            assert check.abs_diff < 1e-3
            assert abs(check.imag_part) < 1e-6

    def test_rejects_points_near_the_edge(self, circular):
        with pytest.raises(ValueError):
            cartesian_cross_check(CIRCULAR, [0.999], 1e-3, radial=circular)
        with pytest.raises(ValueError):
            cartesian_cross_check(CIRCULAR, [0.5], 0.0, radial=circular)
