"""Tests for interaction integrals, mean fields and the top-layer Hamiltonian."""

import numpy as np
import pytest

from mlmctdhb.densities import species_transitions
from mlmctdhb.meanfield import (
    TopHamiltonian,
    build_mean_fields,
    contact_integrals,
    h_elements,
    species_energy,
    v_elements,
    vhat_fields,
    w_elements,
)
from mlmctdhb.models import MixtureModel
from mlmctdhb.state import init_hartree, init_random

from .helpers import make_model


class TestContactIntegrals:
    """Test quadrature contact integrals."""

    def setup_method(self) -> None:
        """Set up random orbitals on a small grid."""
        self.model = make_model([2, 2], [3, 2], [2, 2], points=10)
        state = init_random(self.model, seed=4)
        self.phi, self.chi = state.spfs
        self.grid = self.model.grid

    def test_explicit_sum(self) -> None:
        """Test g Σ_i conj(φ_j) conj(χ_k) φ_q χ_p / w_i."""
        v = contact_integrals(self.phi, self.chi, self.grid, 0.7)
        assert v.shape == (3, 2, 3, 2)
        expected = 0.7 * np.einsum(
            "ji,ki,qi,pi,i->jkqp",
            np.conj(self.phi),
            np.conj(self.chi),
            self.phi,
            self.chi,
            1.0 / self.grid.weights,
        )
        np.testing.assert_allclose(v, expected, atol=1e-12)

    def test_symmetries(self) -> None:
        """Test exchange and Hermitian symmetries of the intra-species elements."""
        v = v_elements(self.phi, self.grid, 0.4)
        np.testing.assert_allclose(v, v.transpose(1, 0, 3, 2), atol=1e-14)
        np.testing.assert_allclose(v, np.conj(v.transpose(2, 3, 0, 1)), atol=1e-14)

    def test_zero_coupling(self) -> None:
        """Test g = 0 gives exact zeros."""
        assert not np.any(contact_integrals(self.phi, self.chi, self.grid, 0.0))

    def test_local_fields(self) -> None:
        """Test vhat[k, p] = g conj(φ_k) φ_p / w at every node."""
        vhat = vhat_fields(self.phi, self.grid, 0.5)
        assert vhat.shape == (3, 3, 10)
        np.testing.assert_allclose(
            vhat[1, 2], 0.5 * np.conj(self.phi[1]) * self.phi[2] / self.grid.weights
        )

    def test_w_elements_with_identity_transitions(self) -> None:
        """Test w reduces to Σ_q integrals for a partner with tau1 = δ."""
        partner_tau1 = np.zeros((2, 2, 1, 1))
        partner_tau1[0, 0] = 1.0
        w = w_elements(self.phi, self.chi, partner_tau1, self.grid, 0.3)
        integrals = contact_integrals(self.phi, self.chi, self.grid, 0.3)
        np.testing.assert_allclose(w[:, :, 0, 0], integrals[:, 0, :, 0], atol=1e-14)


class TestSpeciesEnergy:
    """Test single-species energy blocks."""

    def test_condensate_energy(self) -> None:
        """Test <N,0|H|N,0> = N h_00 + g N(N-1)/2 v_0000."""
        model = make_model([3], [2], [2], g=[0.5], points=20)
        state = init_hartree(model)
        (t,) = species_transitions(state, model)
        h = h_elements(state.spfs[0], model.grid, model.traps[0])
        v = v_elements(state.spfs[0], model.grid, 0.5)
        e = species_energy(h, v, t.tau1, t.tau2)
        expected = 3 * h[0, 0].real + 0.5 * 3 * 2 * v[0, 0, 0, 0].real
        assert e[0, 0].real == pytest.approx(expected)
        np.testing.assert_allclose(e, np.conj(e.T))


class TestTopHamiltonian:
    """Test the top-layer Hamiltonian."""

    def test_dense_and_matrix_free_agree(
        self, three_species_model: MixtureModel
    ) -> None:
        """Test both application paths and Hermiticity."""
        state = init_random(three_species_model, seed=8)
        transitions = species_transitions(state, three_species_model)
        dense = build_mean_fields(state, three_species_model, transitions).top
        free = build_mean_fields(
            state, three_species_model, transitions, dense_limit=0
        ).top
        assert dense.is_dense and not free.is_dense
        np.testing.assert_allclose(
            dense.apply(state.a), free.apply(state.a), atol=1e-12
        )
        matrix = free.to_dense()
        np.testing.assert_allclose(matrix, np.conj(matrix.T), atol=1e-12)
        np.testing.assert_allclose(matrix, dense.to_dense(), atol=1e-12)

    def test_batch_axis(self, two_species_model: MixtureModel) -> None:
        """Test a trailing batch axis is applied column by column."""
        state = init_random(two_species_model, seed=2)
        transitions = species_transitions(state, two_species_model)
        top = build_mean_fields(
            state, two_species_model, transitions, dense_limit=0
        ).top
        batch = np.stack([state.a, 2j * state.a], axis=-1)
        out = top.apply(batch)
        np.testing.assert_allclose(out[..., 1], 2j * top.apply(state.a), atol=1e-12)

    def test_separable_blocks(self) -> None:
        """Test a single-species block acts along its own axis only."""
        block = np.diag([1.0, 2.0])
        top = TopHamiltonian((2, 3), [block, np.zeros((3, 3))], {})
        a = np.ones((2, 3))
        np.testing.assert_allclose(top.apply(a), [[1, 1, 1], [2, 2, 2]])

    def test_pairs_only_for_nonzero_couplings(self) -> None:
        """Test pair blocks are assembled for coupled pairs only."""
        model = make_model([2, 2, 2], [2, 2, 2], [2, 2, 2], points=8)
        state = init_random(model)
        fields = build_mean_fields(state, model, species_transitions(state, model))
        assert fields.top.pair_blocks == {}
        assert set(fields.w) == {(s, p) for s in range(3) for p in range(3) if s != p}
