"""Tests for mixture definitions and the runtime model."""

import numpy as np
import pytest

from mlmctdhb.errors import BasisOverflowError, ConfigError
from mlmctdhb.grid import TrapSpec
from mlmctdhb.models import GridSpec, MixtureModel, MixtureSpec, SpeciesSpec

from .helpers import make_spec


class TestSpeciesSpec:
    """Test species validation."""

    def test_valid_species(self) -> None:
        """Test a valid species and its configuration count."""
        species = SpeciesSpec("A", particles=6, spfs=3, species_states=3, g=0.04)
        assert species.configurations == 28
        assert species.trap == TrapSpec()

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"particles": 0}, "particle number"),
            ({"spfs": 0}, "SPF count"),
            ({"species_states": 0}, "species-state count"),
            ({"species_states": 29}, "exceed the 28 number states"),
        ],
    )
    def test_invalid_species(self, kwargs: dict, message: str) -> None:
        """Test bounds on N, m and M."""
        values = {"particles": 6, "spfs": 3, "species_states": 3}
        values.update(kwargs)
        with pytest.raises(ConfigError, match=message):
            SpeciesSpec("A", **values)

    def test_overflowing_basis(self) -> None:
        """Test a number basis beyond int64 is a resource-cap error."""
        with pytest.raises(BasisOverflowError):
            SpeciesSpec("A", particles=1000, spfs=100, species_states=1)


class TestMixtureSpec:
    """Test mixture construction, coupling matrices and serialization."""

    def test_create_with_named_couplings(self) -> None:
        """Test couplings keyed by species names fill a symmetric matrix."""
        species = [SpeciesSpec(n, 2, 2, 2) for n in "ABC"]
        spec = MixtureSpec.create(species, {("A", "B"): 0.1, ("C", "B"): -0.2})
        assert spec.S == 3
        assert spec.coupling(0, 1) == spec.coupling(1, 0) == 0.1
        assert spec.coupling(1, 2) == spec.coupling(2, 1) == -0.2
        assert spec.coupling(0, 2) == 0.0
        assert spec.pairs == [(0, 1), (0, 2), (1, 2)]

    def test_unknown_species_in_coupling(self) -> None:
        """Test couplings naming unknown species are rejected."""
        species = [SpeciesSpec("A", 2, 2, 2)]
        with pytest.raises(ConfigError, match="unknown species"):
            MixtureSpec.create(species, {("A", "Z"): 0.1})

    def test_asymmetric_matrix_rejected(self) -> None:
        """Test the coupling matrix must be symmetric."""
        species = (SpeciesSpec("A", 2, 2, 2), SpeciesSpec("B", 2, 2, 2))
        with pytest.raises(ConfigError, match="symmetric"):
            MixtureSpec(species, ((0.0, 0.1), (0.2, 0.0)))

    def test_duplicate_names_rejected(self) -> None:
        """Test species names must be unique."""
        species = [SpeciesSpec("A", 2, 2, 2), SpeciesSpec("A", 2, 2, 2)]
        with pytest.raises(ConfigError, match="unique"):
            MixtureSpec.create(species)

    def test_spfs_exceed_grid(self) -> None:
        """Test m > n is rejected."""
        with pytest.raises(ConfigError, match="exceed 4 grid points"):
            MixtureSpec.create([SpeciesSpec("A", 1, 5, 1)], grid=GridSpec(points=4))

    def test_with_truncation(self) -> None:
        """Test a uniform (m, M) replacement."""
        spec = make_spec([6, 6, 6], [3, 3, 3], [3, 3, 3])
        truncated = spec.with_truncation(4, 4)
        assert [s.spfs for s in truncated.species] == [4, 4, 4]
        assert [s.species_states for s in truncated.species] == [4, 4, 4]

    def test_dict_round_trip(self) -> None:
        """Test to_dict/from_dict reproduce an equal spec."""
        spec = make_spec(
            [2, 3],
            [2, 2],
            [2, 3],
            g=[0.1, 0.2],
            inter=0.05,
            trap=TrapSpec(barrier_height=3.0, barrier_width=0.2),
        )
        assert MixtureSpec.from_dict(spec.to_dict()) == spec


class TestMixtureModel:
    """Test the runtime model."""

    def setup_method(self) -> None:
        """Set up a two-species model on a small grid."""
        self.spec = make_spec([2, 3], [2, 2], [2, 3], points=20)
        self.model = MixtureModel.build(self.spec)

    def test_build(self) -> None:
        """Test grid, Hamiltonians and bases are bound to the spec."""
        assert self.model.grid.n == 20
        assert self.model.S == 2
        assert self.model.dims == (2, 3)
        assert [b.size for b in self.model.bases] == [3, 4]
        assert self.model.one_body[0].shape == (20, 20)

    def test_blocked_and_unblocked(self) -> None:
        """Test the blocking step switches the one-body Hamiltonians only."""
        blocked = self.model.blocked(30.0)
        assert all(t.block_height == 30.0 for t in blocked.traps)
        assert blocked.grid is self.model.grid
        diag = np.diag(blocked.one_body[0] - self.model.one_body[0])
        np.testing.assert_allclose(diag, 30.0 * (self.model.grid.nodes > 0))
        restored = blocked.unblocked()
        np.testing.assert_allclose(restored.one_body[1], self.model.one_body[1])

    def test_with_traps_length(self) -> None:
        """Test one trap per species is required."""
        with pytest.raises(ValueError, match="one trap per species"):
            self.model.with_traps((TrapSpec(),))
