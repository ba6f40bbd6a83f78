"""Storage-cost comparison between ML-MCTDHB and single-layer MCTDHB."""

from dataclasses import asdict, dataclass
from typing import List, Optional

from .errors import BasisOverflowError
from .fock import INT64_MAX, basis_size
from .models import MixtureSpec


@dataclass
class CostReport:
    """Complex-coefficient counts of both wavefunction representations."""

    species: List[str]
    grid_points: int
    ml_top: int
    ml_species: List[int]
    ml_spfs: List[int]
    ml_total: int
    mctdhb_top: int
    mctdhb_spfs: List[int]
    mctdhb_total: int
    ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


class CostEstimator:
    """Counts the coefficients each method propagates for a mixture."""

    def estimate(
        self, spec: MixtureSpec, grid_points: Optional[int] = None
    ) -> CostReport:
        """Evaluate both storage formulas with integer arithmetic.

        ML-MCTDHB stores Π M_σ + Σ_σ (M_σ D_σ + m_σ n) coefficients and
        MCTDHB stores Π D_σ + Σ_σ m_σ n, where D_σ = C(N_σ+m_σ-1, m_σ-1).

        Args:
            spec: Mixture definition
            grid_points: Grid size n (defaults to the mixture's grid)

        Returns:
            CostReport with per-layer counts, totals and the MCTDHB/ML ratio

        Raises:
            BasisOverflowError: If a count exceeds a signed 64-bit integer
        """
        n = spec.grid.points if grid_points is None else int(grid_points)
        configurations = [basis_size(s.particles, s.spfs) for s in spec.species]
        ml_top = self._product([s.species_states for s in spec.species])
        ml_species = [
            s.species_states * d for s, d in zip(spec.species, configurations)
        ]
        spfs = [s.spfs * n for s in spec.species]
        ml_total = self._checked(ml_top + sum(ml_species) + sum(spfs))
        mctdhb_top = self._product(configurations)
        mctdhb_total = self._checked(mctdhb_top + sum(spfs))
        return CostReport(
            species=[s.name for s in spec.species],
            grid_points=n,
            ml_top=ml_top,
            ml_species=ml_species,
            ml_spfs=spfs,
            ml_total=ml_total,
            mctdhb_top=mctdhb_top,
            mctdhb_spfs=list(spfs),
            mctdhb_total=mctdhb_total,
            ratio=mctdhb_total / ml_total,
        )

    def _product(self, values: List[int]) -> int:
        out = 1
        for v in values:
            out *= v
        return self._checked(out)

    def _checked(self, value: int) -> int:
        if value > INT64_MAX:
            raise BasisOverflowError(f"coefficient count {value} exceeds 2^63-1")
        return value


def cost_estimate(spec: MixtureSpec, grid_points: Optional[int] = None) -> CostReport:
    """Convenience wrapper around CostEstimator.estimate."""
    return CostEstimator().estimate(spec, grid_points)
