"""Tests for DVR grids, traps and one-body eigenanalysis."""

import numpy as np
import pytest

from mlmctdhb.errors import ConfigError
from mlmctdhb.grid import (
    TrapSpec,
    build_grid,
    eigenpairs,
    hermite_functions,
    one_body_hamiltonian,
)

DOUBLE_WELL = TrapSpec(harmonic=1.0, barrier_height=3.0, barrier_width=0.2)


class TestBuildGrid:
    """Test grid construction and its invariants."""

    def test_harmonic_grid_invariants(self) -> None:
        """Test node ordering, positive weights and a symmetric kinetic matrix."""
        grid = build_grid("harmonic", 40)
        assert grid.n == 40
        assert np.all(np.diff(grid.nodes) > 0)
        assert np.all(grid.weights > 0)
        np.testing.assert_array_equal(grid.kinetic, grid.kinetic.T)

    def test_harmonic_nodes_are_symmetric(self) -> None:
        """Test x_i = -x_{n+1-i} for odd and even point counts."""
        for n in (7, 250):
            grid = build_grid("harmonic", n)
            np.testing.assert_array_equal(grid.nodes, -grid.nodes[::-1])

    def test_production_grid_size(self) -> None:
        """Test the default 250-point grid."""
        grid = build_grid()
        assert grid.kind == "harmonic"
        assert grid.nodes.shape == grid.weights.shape == (250,)

    def test_sine_grid_uniform_spacing(self) -> None:
        """Test sine DVR nodes are spaced 2L/(n+1) inside the box."""
        grid = build_grid("sine", 19, half_width=5.0)
        np.testing.assert_allclose(np.diff(grid.nodes), 10.0 / 20.0, rtol=1e-12)
        np.testing.assert_allclose(grid.weights, 0.5, rtol=1e-12)
        assert grid.nodes[0] > -5.0 and grid.nodes[-1] < 5.0

    def test_quadrature_normalizes_smooth_functions(self) -> None:
        """Test coefficient inner products approximate L2 inner products."""
        grid = build_grid("harmonic", 60)
        values = np.pi**-0.25 * np.exp(-0.5 * (grid.nodes - 0.3) ** 2)
        coeffs = grid.coefficients(values)
        assert np.vdot(coeffs, coeffs).real == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(grid.values(coeffs), values)

    def test_invalid_point_count(self) -> None:
        """Test n < 2 is a configuration error."""
        with pytest.raises(ConfigError, match="grid point count"):
            build_grid("harmonic", 1)

    def test_invalid_kind(self) -> None:
        """Test unknown grid kinds are rejected."""
        with pytest.raises(ConfigError, match="unknown grid kind"):
            build_grid("fourier", 10)

    def test_invalid_extent(self) -> None:
        """Test non-positive extents are rejected."""
        with pytest.raises(ConfigError):
            build_grid("sine", 10, half_width=0.0)
        with pytest.raises(ConfigError):
            build_grid("harmonic", 10, frequency=-1.0)


class TestHermiteFunctions:
    """Test the Hermite function recurrence."""

    def test_orthonormal_on_quadrature(self) -> None:
        """Test h_k are orthonormal under the DVR quadrature."""
        grid = build_grid("harmonic", 30)
        h = hermite_functions(grid.nodes, 10)
        gram = (h * grid.weights) @ h.T
        np.testing.assert_allclose(gram, np.eye(10), atol=1e-10)


class TestTrapSpec:
    """Test trap potentials and validation."""

    def test_double_well_has_central_maximum(self) -> None:
        """Test U(0) exceeds the potential at the well minima."""
        x = np.linspace(-3, 3, 601)
        u = DOUBLE_WELL.potential(x)
        assert u[300] > u[:300].min()
        assert u[300] > u[301:].min()
        assert u[300] == pytest.approx(3.0 / np.sqrt(2 * np.pi * 0.04))

    def test_block_only_acts_right(self) -> None:
        """Test the blocking step raises the right half only."""
        blocked = DOUBLE_WELL.with_block(30.0)
        x = np.array([-1.0, 1.0])
        diff = blocked.potential(x) - DOUBLE_WELL.potential(x)
        np.testing.assert_allclose(diff, [0.0, 30.0])
        assert blocked.without_block() == DOUBLE_WELL

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"barrier_height": -1.0},
            {"barrier_width": 0.0},
            {"block_height": -0.5},
            {"harmonic": 0.0},
        ],
    )
    def test_invalid_parameters(self, kwargs: dict) -> None:
        """Test parameter bounds are enforced."""
        with pytest.raises(ConfigError):
            TrapSpec(**kwargs)


class TestOneBodySpectrum:
    """Test one-body Hamiltonians and eigenpairs."""

    def test_harmonic_oscillator_spectrum(self) -> None:
        """Test the lowest levels of the pure trap are j + 1/2."""
        grid = build_grid("harmonic", 80)
        h = one_body_hamiltonian(grid, TrapSpec())
        energies, _ = eigenpairs(h, 10)
        np.testing.assert_allclose(energies, np.arange(10) + 0.5, atol=1e-8)

    def test_hamiltonian_symmetric(self) -> None:
        """Test the double-well Hamiltonian is symmetric."""
        grid = build_grid("harmonic", 50)
        h = one_body_hamiltonian(grid, DOUBLE_WELL)
        np.testing.assert_array_equal(h, h.T)

    def test_eigenpairs_residual_and_orthonormality(self) -> None:
        """Test ||Hv - Ev|| is small and eigenvectors are orthonormal rows."""
        grid = build_grid("harmonic", 60)
        h = one_body_hamiltonian(grid, DOUBLE_WELL)
        energies, vectors = eigenpairs(h, 6)
        assert vectors.shape == (6, 60)
        residual = h @ vectors.T - vectors.T * energies
        assert np.max(np.abs(residual)) <= 1e-10 * np.linalg.norm(h, 2)
        np.testing.assert_allclose(vectors @ vectors.T, np.eye(6), atol=1e-12)

    def test_eigenpairs_out_of_range(self) -> None:
        """Test k outside [1, n] is rejected."""
        with pytest.raises(ValueError, match="requested 5 eigenpairs"):
            eigenpairs(np.eye(4), 5)
        with pytest.raises(ValueError):
            eigenpairs(np.eye(4), 0)

    def test_blocked_ground_state_is_left(self) -> None:
        """Test the blocked double well localizes the ground state left."""
        grid = build_grid("harmonic", 100)
        h = one_body_hamiltonian(grid, DOUBLE_WELL.with_block(30.0))
        _, vectors = eigenpairs(h, 1)
        assert np.sum(grid.nodes * np.abs(vectors[0]) ** 2) < 0


class TestDoubleWellBands:
    """Test the band structure of the reference double well."""

    def setup_method(self) -> None:
        """Set up the production grid and its spectrum."""
        self.grid = build_grid("harmonic", 250)
        h = one_body_hamiltonian(self.grid, DOUBLE_WELL)
        self.energies, self.vectors = eigenpairs(h, 8)

    def test_doublet_splitting(self) -> None:
        """Test the lowest doublet splitting and the tunneling period."""
        splitting = self.energies[1] - self.energies[0]
        assert splitting == pytest.approx(0.23, abs=0.01)
        assert 2 * np.pi / splitting == pytest.approx(27.0, abs=0.5)

    def test_band_gap(self) -> None:
        """Test the gap between the first and second band."""
        assert self.energies[2] - self.energies[1] == pytest.approx(1.63, abs=0.02)

    def test_three_doublets_below_barrier(self) -> None:
        """Test exactly six levels lie below the barrier top."""
        top = DOUBLE_WELL.potential(np.array([0.0]))[0]
        assert int(np.sum(self.energies < top)) == 6

    def test_grid_convergence(self) -> None:
        """Test the doublet splitting is converged at 250 points."""
        finer = build_grid("harmonic", 350)
        energies, _ = eigenpairs(one_body_hamiltonian(finer, DOUBLE_WELL), 2)
        assert energies[1] - energies[0] == pytest.approx(
            self.energies[1] - self.energies[0], abs=1e-6
        )
