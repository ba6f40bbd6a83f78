"""Tests for the full-CI and Gross-Pitaevskii reference solvers."""

import numpy as np
import pytest

from mlmctdhb.densities import species_transitions
from mlmctdhb.errors import ConfigError, ResourceCapError
from mlmctdhb.grid import eigenpairs
from mlmctdhb.meanfield import build_mean_fields
from mlmctdhb.oracle import (
    as_ml_state,
    build_fullci_basis,
    build_fullci_hamiltonian,
    gp_propagate,
    gp_rhs,
    ground_state_exact,
    propagate_exact,
)

from .helpers import make_model


class TestFullCIBasis:
    """Test mode selection and the dimension cap."""

    def test_small_grid_uses_every_node(self) -> None:
        """Test grids of at most 12 points take all DVR functions as modes."""
        model = make_model([2, 1], [2, 1], [2, 1], points=6)
        basis = build_fullci_basis(model)
        assert basis.dims == (21, 6)
        np.testing.assert_array_equal(basis.modes[0], np.eye(6))

    def test_large_grid_uses_lowest_eigenvectors(self) -> None:
        """Test larger grids take the lowest m one-body eigenvectors."""
        model = make_model([2], [3], [3], points=20)
        basis = build_fullci_basis(model)
        _, vectors = eigenpairs(model.one_body[0], 3)
        np.testing.assert_allclose(basis.modes[0], vectors)
        assert basis.size == 6

    def test_cap(self) -> None:
        """Test ResourceCapError above the cap."""
        model = make_model([4, 4], [4, 4], [1, 1], points=20)
        with pytest.raises(ResourceCapError, match="exceeds the cap"):
            build_fullci_basis(model, cap=1000)


class TestFullCIHamiltonian:
    """Test the sparse Hamiltonian against the ML top layer."""

    def setup_method(self) -> None:
        """Set up a three-species mixture in its full-CI limit."""
        self.model = make_model(
            [2, 1, 2], [4, 4, 4], [10, 4, 10], g=[0.4, 0.0, 0.2], inter=0.25, points=4
        )
        self.basis = build_fullci_basis(self.model)
        self.hamiltonian = build_fullci_hamiltonian(self.model, self.basis)

    def test_hermitian(self) -> None:
        """Test H = H†."""
        dense = self.hamiltonian.toarray()
        np.testing.assert_allclose(dense, np.conj(dense.T), atol=1e-14)

    def test_matches_top_layer(self) -> None:
        """Test the ML top-layer Hamiltonian equals H when C = I and Φ = modes."""
        state = as_ml_state(
            np.ones(self.basis.size) / np.sqrt(self.basis.size), self.model, self.basis
        )
        transitions = species_transitions(state, self.model)
        top = build_mean_fields(state, self.model, transitions).top
        np.testing.assert_allclose(
            top.to_dense(), self.hamiltonian.toarray(), atol=1e-12
        )

    def test_mapping_needs_full_truncation(self) -> None:
        """Test as_ml_state rejects a model that does not match the basis."""
        truncated = make_model([2, 1, 2], [2, 2, 2], [2, 2, 2], points=4)
        with pytest.raises(ValueError, match="full-CI mapping"):
            as_ml_state(np.zeros(self.basis.size), truncated, self.basis)


class TestExactSolvers:
    """Test eigenpairs and time evolution of the full-CI problem."""

    def setup_method(self) -> None:
        """Set up a small interacting mixture."""
        self.model = make_model(
            [2, 2], [3, 3], [6, 6], g=[0.5, 0.5], inter=0.3, points=20
        )
        self.basis = build_fullci_basis(self.model)
        self.hamiltonian = build_fullci_hamiltonian(self.model, self.basis)

    def test_ground_state(self) -> None:
        """Test the returned pair satisfies Hψ = Eψ with ψ normalized."""
        e0, psi = ground_state_exact(self.hamiltonian)
        np.testing.assert_allclose(self.hamiltonian @ psi, e0 * psi, atol=1e-10)
        assert np.linalg.norm(psi) == pytest.approx(1.0)
        assert e0 == pytest.approx(np.linalg.eigvalsh(self.hamiltonian.toarray())[0])

    def test_eigenstate_only_acquires_phase(self) -> None:
        """Test exp(-iHt) ψ0 = exp(-iE t) ψ0."""
        e0, psi = ground_state_exact(self.hamiltonian)
        out = propagate_exact(psi, self.hamiltonian, [0.0, 0.7])
        np.testing.assert_allclose(out[-1], np.exp(-0.7j * e0) * psi, atol=1e-9)


class TestGrossPitaevskii:
    """Test the coupled GP reference."""

    def setup_method(self) -> None:
        """Set up one orbital per species."""
        self.model = make_model(
            [3, 2], [1, 1], [1, 1], g=[0.3, 0.1], inter=0.2, points=16
        )
        _, vectors = eigenpairs(self.model.one_body[0], 2)
        self.orbitals = np.stack([vectors[0], (vectors[0] + vectors[1]) / np.sqrt(2)])

    def test_norm_conserved(self) -> None:
        """Test each orbital stays normalized."""
        out = gp_propagate(self.model, self.orbitals, [0.0, 0.5, 1.0])
        assert out.shape == (3, 2, 16)
        np.testing.assert_allclose(np.linalg.norm(out, axis=2), 1.0, atol=1e-10)

    def test_rhs_is_operator_times_minus_i(self) -> None:
        """Test the non-interacting limit is -i h φ."""
        free = make_model([3, 2], [1, 1], [1, 1], points=16)
        rhs = gp_rhs(free, self.orbitals.astype(complex))
        expected = -1j * np.stack(
            [free.one_body[s] @ self.orbitals[s] for s in range(2)]
        )
        np.testing.assert_allclose(rhs, expected, atol=1e-14)

    def test_wrong_shape(self) -> None:
        """Test ConfigError for a wrong orbital array."""
        with pytest.raises(ConfigError, match="one orbital per species"):
            gp_propagate(self.model, self.orbitals[:1], [0.0, 1.0])

    def test_unnormalized_orbitals(self) -> None:
        """Test ValueError for unnormalized orbitals."""
        with pytest.raises(ValueError, match="normalized"):
            gp_propagate(self.model, 2 * self.orbitals, [0.0, 1.0])
