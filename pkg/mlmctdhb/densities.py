"""Reduced density matrices of the species and particle layers.

Conventions (zero-based indices):

- eta1[i, s] = Σ_J conj(A_{..i..}) A_{..s..} (species-layer hole density)
- eta2[s, u, t, v] = Σ_J conj(A_{..s..u..}) A_{..t..v..}
- rho1[i, j] = <a†_i a_j> / N
- rho2_same[j, k, q, p] = <a†_j a†_k a_q a_p> / N            (trace N - 1)
- rho2_cross[j, k, q, p] = <a†_j b†_k b_p a_q> / N_σ         (trace N_σ')
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

import numpy as np

from .fock import LadderActions, NumberBasis, ladder_actions, transition_tensors

if TYPE_CHECKING:
    from .models import MixtureModel
    from .state import MLState

HERMITICITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SpeciesTransitions:
    """Ladder strings applied to one species' states and their matrix elements."""

    actions: LadderActions
    tau1: np.ndarray
    tau2: np.ndarray


def species_transitions(
    state: "MLState", model: "MixtureModel"
) -> Tuple[SpeciesTransitions, ...]:
    """Transition tensors <ψ_u|...|ψ_v> for every species of a snapshot."""
    out = []
    for basis, c in zip(model.bases, state.coeffs):
        actions = ladder_actions(basis, c)
        tau1, tau2 = transition_tensors(c, actions)
        out.append(SpeciesTransitions(actions=actions, tau1=tau1, tau2=tau2))
    return tuple(out)


def eta1(a: np.ndarray, sigma: int) -> np.ndarray:
    """Species-layer reduced density matrix of species σ."""
    x = np.moveaxis(a, sigma, 0).reshape(a.shape[sigma], -1)
    return np.conj(x) @ x.T


def eta2(a: np.ndarray, sigma: int, partner: int) -> np.ndarray:
    """Pair density of species σ and σ' indexed [s, u, t, v].

    Raises:
        ValueError: If σ == σ'
    """
    if sigma == partner:
        raise ValueError("eta2 needs two different species")
    x = np.moveaxis(a, (sigma, partner), (0, 1))
    x = x.reshape(a.shape[sigma], a.shape[partner], -1)
    return np.tensordot(np.conj(x), x, axes=(2, 2))


def _tau1(coeffs: np.ndarray, basis: NumberBasis) -> np.ndarray:
    return transition_tensors(coeffs, ladder_actions(basis, coeffs))[0]


def rho1(
    a: np.ndarray, coeffs: np.ndarray, basis: NumberBasis, sigma: int
) -> np.ndarray:
    """One-body density of species σ from A and its species states C^σ."""
    return _rho1_from(eta1(a, sigma), _tau1(coeffs, basis), basis.N)


def _rho1_from(eta: np.ndarray, tau1: np.ndarray, N: int) -> np.ndarray:
    return np.tensordot(tau1, eta, axes=([2, 3], [0, 1])) / N


def rho2_same(
    a: np.ndarray, coeffs: np.ndarray, basis: NumberBasis, sigma: int
) -> np.ndarray:
    """Same-species two-body density of species σ.

    Raises:
        ValueError: If the species has fewer than two particles
    """
    if basis.N < 2:
        raise ValueError("same-species two-body density needs at least two particles")
    _, tau2 = transition_tensors(coeffs, ladder_actions(basis, coeffs))
    return _rho2_same_from(eta1(a, sigma), tau2, basis.N)


def _rho2_same_from(eta: np.ndarray, tau2: np.ndarray, N: int) -> np.ndarray:
    return np.tensordot(tau2, eta, axes=([4, 5], [0, 1])) / N


def rho2_cross(
    a: np.ndarray,
    coeffs: np.ndarray,
    partner_coeffs: np.ndarray,
    basis: NumberBasis,
    partner_basis: NumberBasis,
    sigma: int,
    partner: int,
) -> np.ndarray:
    """Inter-species two-body density of the pair (σ, σ')."""
    eta = eta2(a, sigma, partner)
    return _rho2_cross_from(
        eta, _tau1(coeffs, basis), _tau1(partner_coeffs, partner_basis), basis.N
    )


def _rho2_cross_from(
    eta: np.ndarray, tau1: np.ndarray, partner_tau1: np.ndarray, N: int
) -> np.ndarray:
    # Σ_{stuv} eta[s,u,t,v] tau1[j,q,s,t] tau1'[k,p,u,v]
    weighted = np.tensordot(tau1, eta, axes=([2, 3], [0, 2]))
    pair = np.tensordot(weighted, partner_tau1, axes=([2, 3], [2, 3]))
    return pair.transpose(0, 2, 1, 3) / N


def natural_populations(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian density matrix.

    Returns:
        Tuple (populations descending, eigenvectors as rows); each row has its
        largest-magnitude component real positive

    Raises:
        ValueError: If the matrix is not Hermitian within 1e-10
    """
    matrix = np.asarray(matrix)
    if np.max(np.abs(matrix - np.conj(matrix.T)), initial=0.0) > HERMITICITY_TOLERANCE:
        raise ValueError("natural populations need a Hermitian matrix")
    values, vectors = np.linalg.eigh(0.5 * (matrix + np.conj(matrix.T)))
    order = np.argsort(values, kind="stable")[::-1]
    values = values[order]
    vectors = vectors[:, order].T.astype(complex)
    for row in vectors:
        pivot = row[np.argmax(np.abs(row))]
        if pivot != 0:
            row *= np.conj(pivot) / abs(pivot)
    return values, vectors


def natural_orbitals(
    rho: np.ndarray, spfs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Natural populations and orbitals (DVR coefficient rows) of one species."""
    populations, vectors = natural_populations(rho)
    return populations, np.conj(vectors) @ spfs


def regularized_inverse(matrix: np.ndarray, epsilon: float = 1e-10) -> np.ndarray:
    """Inverse of a Hermitian PSD matrix with eigenvalues clamped to ≥ ε."""
    values, vectors = np.linalg.eigh(0.5 * (matrix + np.conj(matrix.T)))
    inverse = (vectors / np.maximum(values, epsilon)) @ np.conj(vectors.T)
    return 0.5 * (inverse + np.conj(inverse.T))


def species_entropy(eta: np.ndarray) -> float:
    """Von Neumann entropy -Σ λ ln λ of the natural populations of η1."""
    values = np.linalg.eigvalsh(0.5 * (eta + np.conj(eta.T)))
    values = values[values > 1e-15]
    return float(-np.sum(values * np.log(values)))


@dataclass(frozen=True)
class DensitySet:
    """All reduced densities of one snapshot.

    Pair quantities are keyed by ordered pairs (σ, σ') with σ != σ';
    ``rho2_same[σ]`` is None for single-particle species.
    """

    eta1: Tuple[np.ndarray, ...]
    eta2: Dict[Tuple[int, int], np.ndarray]
    rho1: Tuple[np.ndarray, ...]
    rho2_same: Tuple[Optional[np.ndarray], ...]
    rho2_cross: Dict[Tuple[int, int], np.ndarray]
    transitions: Tuple[SpeciesTransitions, ...]


def compute_density_set(
    state: "MLState",
    model: "MixtureModel",
    transitions: Optional[Tuple[SpeciesTransitions, ...]] = None,
) -> DensitySet:
    """Evaluate every density of a snapshot, sharing the transition tensors."""
    if transitions is None:
        transitions = species_transitions(state, model)
    S = state.S
    particles = [s.particles for s in model.spec.species]
    e1 = tuple(eta1(state.a, sigma) for sigma in range(S))
    e2: Dict[Tuple[int, int], np.ndarray] = {}
    r2x: Dict[Tuple[int, int], np.ndarray] = {}
    for sigma in range(S):
        for partner in range(S):
            if sigma == partner:
                continue
            e2[(sigma, partner)] = eta2(state.a, sigma, partner)
            r2x[(sigma, partner)] = _rho2_cross_from(
                e2[(sigma, partner)],
                transitions[sigma].tau1,
                transitions[partner].tau1,
                particles[sigma],
            )
    r1 = tuple(
        _rho1_from(e1[sigma], transitions[sigma].tau1, particles[sigma])
        for sigma in range(S)
    )
    r2: List[Optional[np.ndarray]] = []
    for sigma in range(S):
        if particles[sigma] >= 2:
            r2.append(
                _rho2_same_from(e1[sigma], transitions[sigma].tau2, particles[sigma])
            )
        else:
            r2.append(None)
    return DensitySet(
        eta1=e1,
        eta2=e2,
        rho1=r1,
        rho2_same=tuple(r2),
        rho2_cross=r2x,
        transitions=transitions,
    )
