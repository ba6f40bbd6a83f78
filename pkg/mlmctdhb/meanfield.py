"""Interaction matrix elements, mean-field operators and the top-layer Hamiltonian.

Contact integrals use DVR quadrature: for coefficient rows c the product of
four orbitals integrates to Σ_i conj(c_j) conj(c_k) c_q c_p / w_i.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Optional, Sequence, Tuple

import numpy as np

from .grid import Grid, TrapSpec, one_body_hamiltonian

if TYPE_CHECKING:
    from .densities import SpeciesTransitions
    from .models import MixtureModel
    from .state import MLState

DENSE_TOP_LIMIT = 4096


def apply_one_body(matrix: np.ndarray, spfs: np.ndarray) -> np.ndarray:
    """h|φ_j> for every row of ``spfs`` (h real symmetric on the grid)."""
    if np.iscomplexobj(spfs):
        return spfs.real @ matrix.T + 1j * (spfs.imag @ matrix.T)
    return spfs @ matrix.T


def project_one_body(spfs: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """<φ_j|h|φ_k> of a grid operator onto the SPF span."""
    h = np.conj(spfs) @ apply_one_body(matrix, spfs).T
    return 0.5 * (h + np.conj(h.T))


def h_elements(spfs: np.ndarray, grid: Grid, trap: TrapSpec) -> np.ndarray:
    """One-body matrix elements of kinetic energy plus trap."""
    return project_one_body(spfs, one_body_hamiltonian(grid, trap))


def orbital_products(spfs: np.ndarray) -> np.ndarray:
    """conj(φ_j) φ_q at every node, shape (m, m, n)."""
    return np.conj(spfs)[:, None, :] * spfs[None, :, :]


def contact_integrals(
    spfs: np.ndarray,
    partner_spfs: np.ndarray,
    grid: Grid,
    g: float,
    products: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """g <φ_j φ'_k | δ | φ_q φ'_p> indexed [j, k, q, p].

    The first and third indices belong to ``spfs``, the second and fourth to
    ``partner_spfs``. ``products`` may pass precomputed ``orbital_products``
    of both arrays.
    """
    m, mp = spfs.shape[0], partner_spfs.shape[0]
    if g == 0.0:
        return np.zeros((m, mp, m, mp), dtype=complex)
    if products is None:
        products = (orbital_products(spfs), orbital_products(partner_spfs))
    left = (products[0] / grid.weights).reshape(m * m, -1)
    right = products[1].reshape(mp * mp, -1)
    # [jq, kp] -> [j, k, q, p]
    return g * (left @ right.T).reshape(m, m, mp, mp).transpose(0, 2, 1, 3)


def v_elements(spfs: np.ndarray, grid: Grid, g: float) -> np.ndarray:
    """Intra-species contact elements v_{jkqp} = g <φ_j φ_k|δ|φ_q φ_p>."""
    return contact_integrals(spfs, spfs, grid, g)


def w_elements(
    spfs: np.ndarray,
    partner_spfs: np.ndarray,
    partner_tau1: np.ndarray,
    grid: Grid,
    g: float,
    integrals: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Inter-species mean-field elements w^{jk}_{uv} of species σ.

    Args:
        spfs: SPFs of species σ
        partner_spfs: SPFs of species σ'
        partner_tau1: <ψ'_u|b†_q b_p|ψ'_v> of species σ', indexed [q, p, u, v]
        grid: Shared DVR grid
        g: Coupling g_{σσ'}
        integrals: Precomputed ``contact_integrals(spfs, partner_spfs, grid, g)``

    Returns:
        Tensor indexed [j, k, u, v]
    """
    if integrals is None:
        integrals = contact_integrals(spfs, partner_spfs, grid, g)
    # integrals[j, q, k, p] = g <φ_j φ'_q|δ|φ_k φ'_p>
    return np.tensordot(integrals, partner_tau1, axes=([1, 3], [0, 1]))


def vhat_fields(spfs: np.ndarray, grid: Grid, g: float) -> np.ndarray:
    """Local mean-field potentials g conj(φ_k) φ_p at the nodes, shape (m, m, n)."""
    return g * orbital_products(spfs) / grid.weights


def what_fields(partner_spfs: np.ndarray, grid: Grid, g: float) -> np.ndarray:
    """Inter-species local potentials built from the partner's orbitals."""
    return vhat_fields(partner_spfs, grid, g)


def species_energy(
    h: np.ndarray, v: np.ndarray, tau1: np.ndarray, tau2: np.ndarray
) -> np.ndarray:
    """<ψ_u|H_σ + V_σ|ψ_v> between species states."""
    e = np.tensordot(h, tau1, axes=([0, 1], [0, 1]))
    e = e + 0.5 * np.tensordot(v, tau2, axes=([0, 1, 2, 3], [0, 1, 2, 3]))
    return 0.5 * (e + np.conj(e.T))


def pair_coupling(
    integrals: np.ndarray, tau1: np.ndarray, partner_tau1: np.ndarray
) -> np.ndarray:
    """Inter-species block W[a, c, b, d] = <ψ_a ψ'_c|W|ψ_b ψ'_d>."""
    # Σ_{jkqp} integrals[j,k,q,p] tau1[j,q,a,b] tau1'[k,p,c,d]
    half = np.tensordot(integrals, tau1, axes=([0, 2], [0, 1]))
    block = np.tensordot(half, partner_tau1, axes=([0, 1], [0, 1]))
    return block.transpose(0, 2, 1, 3)


class TopHamiltonian:
    """Top-layer Hamiltonian over Hartree products of species states.

    H = Σ_σ E^σ (acting on axis σ) + Σ_{σ<σ'} W^{σσ'} (acting on axes σ, σ').
    Small problems are materialized densely; larger ones are applied
    matrix-free.
    """

    def __init__(
        self,
        dims: Tuple[int, ...],
        species_blocks: Sequence[np.ndarray],
        pair_blocks: Dict[Tuple[int, int], np.ndarray],
        dense_limit: int = DENSE_TOP_LIMIT,
    ) -> None:
        self.dims = tuple(dims)
        self.species_blocks = tuple(species_blocks)
        self.pair_blocks = dict(pair_blocks)
        self.size = int(np.prod(self.dims))
        self._dense: Optional[np.ndarray] = None
        if self.size <= dense_limit:
            self._dense = self._apply_blocks(
                np.eye(self.size, dtype=complex).reshape(self.dims + (self.size,))
            ).reshape(self.size, self.size)

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    def _apply_blocks(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros(a.shape, dtype=complex)
        for sigma, block in enumerate(self.species_blocks):
            out += np.moveaxis(np.tensordot(block, a, axes=(1, sigma)), 0, sigma)
        for (sigma, partner), block in self.pair_blocks.items():
            term = np.tensordot(block, a, axes=([2, 3], [sigma, partner]))
            out += np.moveaxis(term, (0, 1), (sigma, partner))
        return out

    def apply(self, a: np.ndarray) -> np.ndarray:
        """H·A for a tensor of shape dims, optionally with one trailing batch axis."""
        if self._dense is not None:
            flat = a.reshape(self.size, -1)
            return (self._dense @ flat).reshape(a.shape)
        return self._apply_blocks(a)

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        basis = np.eye(self.size, dtype=complex).reshape(self.dims + (self.size,))
        return self._apply_blocks(basis).reshape(self.size, self.size)


@dataclass(frozen=True)
class MeanFieldSet:
    """Every operator entering the equations of motion for one snapshot.

    Pair quantities are keyed by ordered species pairs (σ, σ').
    """

    h: Tuple[np.ndarray, ...]
    v: Tuple[np.ndarray, ...]
    vhat: Tuple[np.ndarray, ...]
    species_energy: Tuple[np.ndarray, ...]
    w: Dict[Tuple[int, int], np.ndarray]
    what: Dict[Tuple[int, int], np.ndarray]
    top: TopHamiltonian


def top_hamiltonian(
    state: "MLState",
    model: "MixtureModel",
    transitions: Sequence["SpeciesTransitions"],
    dense_limit: int = DENSE_TOP_LIMIT,
) -> TopHamiltonian:
    """Assemble H^top of a snapshot from its transition tensors."""
    return build_mean_fields(state, model, transitions, dense_limit).top


def build_mean_fields(
    state: "MLState",
    model: "MixtureModel",
    transitions: Sequence["SpeciesTransitions"],
    dense_limit: int = DENSE_TOP_LIMIT,
) -> MeanFieldSet:
    """Evaluate all matrix elements and mean-field operators of a snapshot.

    Contact integrals of a pair are evaluated once and shared by both
    directions of ``w`` and by the top-layer pair block.
    """
    grid = model.grid
    species = model.spec.species
    products = tuple(orbital_products(phi) for phi in state.spfs)
    weighted = tuple(p / grid.weights for p in products)
    h = tuple(project_one_body(phi, hm) for phi, hm in zip(state.spfs, model.one_body))
    v = tuple(
        contact_integrals(phi, phi, grid, s.g, (p, p))
        for phi, p, s in zip(state.spfs, products, species)
    )
    vhat = tuple(s.g * x for s, x in zip(species, weighted))
    energies = tuple(
        species_energy(
            h[sigma], v[sigma], transitions[sigma].tau1, transitions[sigma].tau2
        )
        for sigma in range(model.S)
    )
    w: Dict[Tuple[int, int], np.ndarray] = {}
    what: Dict[Tuple[int, int], np.ndarray] = {}
    pairs: Dict[Tuple[int, int], np.ndarray] = {}
    for sigma, partner in model.spec.pairs:
        g = model.spec.coupling(sigma, partner)
        phi, phi_p = state.spfs[sigma], state.spfs[partner]
        integrals = contact_integrals(
            phi, phi_p, grid, g, (products[sigma], products[partner])
        )
        # the same integrals seen from the partner: [k, j, p, q]
        mirrored = integrals.transpose(1, 0, 3, 2)
        tau1, tau1_p = transitions[sigma].tau1, transitions[partner].tau1
        w[(sigma, partner)] = w_elements(phi, phi_p, tau1_p, grid, g, integrals)
        w[(partner, sigma)] = w_elements(phi_p, phi, tau1, grid, g, mirrored)
        what[(sigma, partner)] = g * weighted[partner]
        what[(partner, sigma)] = g * weighted[sigma]
        if g != 0.0:
            pairs[(sigma, partner)] = pair_coupling(integrals, tau1, tau1_p)
    top = TopHamiltonian(model.dims, energies, pairs, dense_limit)
    return MeanFieldSet(
        h=h, v=v, vhat=vhat, species_energy=energies, w=w, what=what, top=top
    )
