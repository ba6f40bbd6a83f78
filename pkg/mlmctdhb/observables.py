"""Well populations, joint well probabilities and correlation measures."""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .densities import compute_density_set, natural_populations, species_entropy
from .grid import Grid
from .meanfield import build_mean_fields
from .models import MixtureModel
from .state import MLState, norm, orthonormality_residual

SIDES = ("L", "R")
MARGINAL_FLOOR = 1e-8
TOP_POPULATIONS = 3


def side_weights(grid: Grid, side: str) -> np.ndarray:
    """Per-node membership of a well: 1 inside, 0 outside, 0.5 on x = 0."""
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}. Valid sides: {SIDES}")
    x = grid.nodes
    inside = x < 0 if side == "L" else x > 0
    return np.where(x == 0, 0.5, inside.astype(float))


def position_density(rho1: np.ndarray, spfs: np.ndarray) -> np.ndarray:
    """Probability mass of one particle at every grid node (sums to tr ρ1)."""
    mass = np.sum(np.conj(spfs) * (rho1 @ spfs), axis=0)
    return mass.real


def well_probability(density: np.ndarray, grid: Grid, side: str) -> float:
    """Probability of a particle in the left ("L") or right ("R") well."""
    return float(np.sum(density * side_weights(grid, side)))


def _side_overlap(spfs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # S[j, p] = Σ_i weight_i conj(c_j(i)) c_p(i)
    return (np.conj(spfs) * weights) @ spfs.T


def joint_well_probability(
    pair_density: np.ndarray,
    spfs: np.ndarray,
    partner_spfs: np.ndarray,
    grid: Grid,
    sides: Tuple[str, str] = ("L", "L"),
) -> float:
    """Probability of finding the two particles of a pair in the given wells.

    Args:
        pair_density: Two-body density R[j, k, q, p] whose diagonal is
            Σ R conj(φ_j(x)) φ_q(x) conj(φ'_k(y)) φ'_p(y); it is renormalized
            to unit total mass
        spfs: Orbitals of the first particle
        partner_spfs: Orbitals of the second particle
        grid: Shared grid
        sides: Wells of the first and second particle

    Returns:
        Quadrant probability; the four quadrants sum to 1
    """
    first = _side_overlap(spfs, side_weights(grid, sides[0]))
    second = _side_overlap(partner_spfs, side_weights(grid, sides[1]))
    full_a = _side_overlap(spfs, np.ones(grid.n))
    full_b = _side_overlap(partner_spfs, np.ones(grid.n))
    total = np.einsum("jkqp,jq,kp->", pair_density, full_a, full_b).real
    quadrant = np.einsum("jkqp,jq,kp->", pair_density, first, second).real
    return float(quadrant / total)


def same_species_pair_form(rho2: np.ndarray) -> np.ndarray:
    """Reorder <a†_j a†_k a_q a_p> so its diagonal pairs (j, p) and (k, q)."""
    return rho2.transpose(0, 1, 3, 2)


def correlation_f(
    p_ll: float,
    p_rr: float,
    p_left: float,
    p_right: float,
    partner_left: float,
    partner_right: float,
    floor: float = MARGINAL_FLOOR,
) -> Tuple[float, float, float]:
    """Correlation measures (f_LL, f_RR, f).

    f_LL = P_LL / (P_L P'_L), likewise for RR, and f = sqrt((f_LL² + f_RR²)/2).
    Components whose marginals fall below ``floor`` are NaN.
    """
    f_ll = (
        p_ll / (p_left * partner_left)
        if min(p_left, partner_left) >= floor
        else np.nan
    )
    f_rr = (
        p_rr / (p_right * partner_right)
        if min(p_right, partner_right) >= floor
        else np.nan
    )
    f = float(np.sqrt(0.5 * (f_ll**2 + f_rr**2)))
    return float(f_ll), float(f_rr), f


@dataclass(frozen=True)
class PairRecord:
    """Joint probabilities of one species pair (σ == σ' for same-species)."""

    first: int
    second: int
    p_ll: float
    p_rr: float
    f_ll: float
    f_rr: float
    f: float


@dataclass(frozen=True)
class ObservableRecord:
    """Everything recorded at one output time."""

    t: float
    species: Tuple[str, ...]
    p_left: Tuple[float, ...]
    p_right: Tuple[float, ...]
    rho1_populations: Tuple[np.ndarray, ...]
    eta1_populations: Tuple[np.ndarray, ...]
    pairs: Tuple[PairRecord, ...]
    norm: float
    energy: float
    orthonormality_residual: float
    entropies: Tuple[float, ...]

    def header(self) -> List[str]:
        """CSV column names in the fixed output order."""
        cols = ["t"]
        for name in self.species:
            cols += [f"P_L_{name}", f"P_R_{name}"]
            cols += [f"rho1_{k + 1}_{name}" for k in range(TOP_POPULATIONS)]
            cols += [f"eta1_{k + 1}_{name}" for k in range(TOP_POPULATIONS)]
        for pair in self.pairs:
            tag = f"{self.species[pair.first]}_{self.species[pair.second]}"
            cols += [f"P_LL_{tag}", f"P_RR_{tag}"]
            cols += [f"f_LL_{tag}", f"f_RR_{tag}", f"f_{tag}"]
        cols += ["norm", "energy", "ortho_residual"]
        cols += [f"S_eta_{name}" for name in self.species]
        return cols

    def values(self) -> List[float]:
        row = [self.t]
        for sigma in range(len(self.species)):
            row += [self.p_left[sigma], self.p_right[sigma]]
            row += _top(self.rho1_populations[sigma])
            row += _top(self.eta1_populations[sigma])
        for pair in self.pairs:
            row += [pair.p_ll, pair.p_rr, pair.f_ll, pair.f_rr, pair.f]
        row += [self.norm, self.energy, self.orthonormality_residual]
        row += list(self.entropies)
        return [float(x) for x in row]

    def is_finite(self) -> bool:
        """True unless a quantity other than the f measures is NaN or infinite."""
        scalars = list(self.p_left) + list(self.p_right) + list(self.entropies)
        scalars += [self.norm, self.energy, self.orthonormality_residual]
        scalars += [p.p_ll for p in self.pairs] + [p.p_rr for p in self.pairs]
        arrays = list(self.rho1_populations) + list(self.eta1_populations)
        return bool(np.all(np.isfinite(scalars))) and all(
            bool(np.all(np.isfinite(a))) for a in arrays
        )


def _top(populations: np.ndarray) -> List[float]:
    values = [float(x) for x in populations[:TOP_POPULATIONS]]
    return values + [0.0] * (TOP_POPULATIONS - len(values))


def record(
    state: MLState, model: MixtureModel, t: Optional[float] = None
) -> ObservableRecord:
    """Assemble the full observable record of one snapshot."""
    densities = compute_density_set(state, model)
    grid = model.grid
    species = model.spec.species
    S = state.S
    p_left = []
    p_right = []
    for sigma in range(S):
        density = position_density(densities.rho1[sigma], state.spfs[sigma])
        p_left.append(well_probability(density, grid, "L"))
        p_right.append(well_probability(density, grid, "R"))
    pairs = []
    for sigma in range(S):
        for partner in range(sigma, S):
            if sigma == partner:
                rho2 = densities.rho2_same[sigma]
                if rho2 is None:
                    continue
                pair_density = same_species_pair_form(rho2)
            else:
                pair_density = densities.rho2_cross[(sigma, partner)]
            phi, phi_p = state.spfs[sigma], state.spfs[partner]
            p_ll = joint_well_probability(pair_density, phi, phi_p, grid, ("L", "L"))
            p_rr = joint_well_probability(pair_density, phi, phi_p, grid, ("R", "R"))
            f_ll, f_rr, f = correlation_f(
                p_ll,
                p_rr,
                p_left[sigma],
                p_right[sigma],
                p_left[partner],
                p_right[partner],
            )
            pairs.append(PairRecord(sigma, partner, p_ll, p_rr, f_ll, f_rr, f))
    fields = build_mean_fields(state, model, densities.transitions)
    value = np.vdot(state.a, fields.top.apply(state.a)).real
    return ObservableRecord(
        t=state.time if t is None else float(t),
        species=tuple(s.name for s in species),
        p_left=tuple(p_left),
        p_right=tuple(p_right),
        rho1_populations=tuple(natural_populations(r)[0] for r in densities.rho1),
        eta1_populations=tuple(natural_populations(e)[0] for e in densities.eta1),
        pairs=tuple(pairs),
        norm=norm(state),
        energy=float(value),
        orthonormality_residual=orthonormality_residual(state),
        entropies=tuple(species_entropy(e) for e in densities.eta1),
    )
