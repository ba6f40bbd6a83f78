"""Reference solvers: full-CI exact dynamics and coupled Gross-Pitaevskii equations.

Both reuse the grid integrals of the main code but assemble and integrate
independently: the full-CI Hamiltonian is built from sparse hopping
matrices in a fixed mode basis, and time integration uses
``scipy.integrate.solve_ivp``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .errors import ConfigError, NumericalError, ResourceCapError
from .fock import NumberBasis, enumerate_basis, hopping_matrix
from .grid import eigenpairs
from .meanfield import contact_integrals, project_one_body
from .models import MixtureModel
from .state import MLState

logger = logging.getLogger(__name__)

FULLCI_CAP = 20_000
FULL_GRID_LIMIT = 12
DENSE_EIGEN_LIMIT = 2_000


@dataclass(frozen=True, eq=False)
class FullCIBasis:
    """Fixed mode basis and number bases of every species.

    Attributes:
        modes: Per species, orthonormal mode rows of shape (k, n)
        bases: Per species, NumberBasis(N, k)
    """

    modes: Tuple[np.ndarray, ...]
    bases: Tuple[NumberBasis, ...]

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(b.size for b in self.bases)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))


def build_fullci_basis(
    model: MixtureModel,
    modes: Optional[Sequence[int]] = None,
    cap: int = FULLCI_CAP,
) -> FullCIBasis:
    """Choose the mode basis of every species.

    Grids with at most 12 points use every DVR function as a mode; otherwise
    each species uses its lowest ``modes[σ]`` one-body eigenvectors
    (default m_σ).

    Raises:
        ResourceCapError: If the product dimension exceeds ``cap``
    """
    n = model.grid.n
    chosen = []
    bases = []
    for sigma, species in enumerate(model.spec.species):
        if n <= FULL_GRID_LIMIT and modes is None:
            rows = np.eye(n, dtype=complex)
        else:
            k = species.spfs if modes is None else int(modes[sigma])
            _, rows = eigenpairs(model.one_body[sigma], k)
            rows = rows.astype(complex)
        chosen.append(rows)
        bases.append(enumerate_basis(species.particles, rows.shape[0]))
    basis = FullCIBasis(modes=tuple(chosen), bases=tuple(bases))
    if basis.size > cap:
        raise ResourceCapError(
            f"full-CI dimension {basis.size} exceeds the cap of {cap}"
        )
    logger.info("full-CI basis: dims=%s, size=%d", basis.dims, basis.size)
    return basis


def _embed(ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return sp.csr_matrix(out)


def build_fullci_hamiltonian(
    model: MixtureModel, basis: FullCIBasis
) -> sp.csr_matrix:
    """Sparse many-body Hamiltonian over the product of number bases."""
    grid = model.grid
    S = model.S
    identities = [sp.identity(d, format="csr", dtype=complex) for d in basis.dims]
    hops = [
        [
            [hopping_matrix(b, j, k).astype(complex) for k in range(b.m)]
            for j in range(b.m)
        ]
        for b in basis.bases
    ]
    total = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for sigma, species in enumerate(model.spec.species):
        modes = basis.modes[sigma]
        k = modes.shape[0]
        h = project_one_body(modes, model.one_body[sigma])
        v = contact_integrals(modes, modes, grid, species.g)
        E = hops[sigma]
        block = sp.csr_matrix((basis.dims[sigma],) * 2, dtype=complex)
        for j in range(k):
            for q in range(k):
                if h[j, q] != 0:
                    block = block + h[j, q] * E[j][q]
        if species.g != 0.0 and species.particles >= 2:
            for j in range(k):
                for kk in range(k):
                    for q in range(k):
                        for p in range(k):
                            c = 0.5 * v[j, kk, q, p]
                            if c == 0:
                                continue
                            # a†_j a†_k a_q a_p
                            #   = a†_j a_p a†_k a_q - δ_kp a†_j a_q
                            term = E[j][p] @ E[kk][q]
                            if kk == p:
                                term = term - E[j][q]
                            block = block + c * term
        ops = list(identities)
        ops[sigma] = block
        total = total + _embed(ops)
    for sigma in range(S):
        for partner in range(sigma + 1, S):
            g = model.spec.coupling(sigma, partner)
            if g == 0.0:
                continue
            integrals = contact_integrals(
                basis.modes[sigma], basis.modes[partner], grid, g
            )
            ka, kb = basis.modes[sigma].shape[0], basis.modes[partner].shape[0]
            for j in range(ka):
                for q in range(ka):
                    for k in range(kb):
                        for p in range(kb):
                            c = integrals[j, k, q, p]
                            if c == 0:
                                continue
                            ops = list(identities)
                            ops[sigma] = hops[sigma][j][q]
                            ops[partner] = hops[partner][k][p]
                            total = total + c * _embed(ops)
    total = 0.5 * (total + total.conj().T)
    return sp.csr_matrix(total)


def propagate_exact(
    psi0: np.ndarray,
    hamiltonian: sp.spmatrix,
    times: Sequence[float],
    atol: float = 1e-12,
    rtol: float = 1e-12,
) -> np.ndarray:
    """Integrate i dψ/dt = Hψ and sample ψ at ``times``.

    Returns:
        Array of shape (len(times), dim)

    Raises:
        NumericalError: If the integrator fails
    """
    times = np.asarray(times, dtype=float)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return -1j * (hamiltonian @ y)

    sol = solve_ivp(
        rhs,
        (times[0], times[-1]),
        np.asarray(psi0, dtype=complex),
        method="DOP853",
        t_eval=times,
        atol=atol,
        rtol=rtol,
    )
    if not sol.success:
        raise NumericalError(f"exact propagation failed: {sol.message}")
    return sol.y.T


def ground_state_exact(hamiltonian: sp.spmatrix) -> Tuple[float, np.ndarray]:
    """Lowest eigenpair; dense for small dimensions, Lanczos otherwise."""
    size = hamiltonian.shape[0]
    if size <= DENSE_EIGEN_LIMIT:
        values, vectors = eigh(hamiltonian.toarray(), subset_by_index=[0, 0])
        e0, psi = values[0], vectors[:, 0]
    else:
        values, vectors = eigsh(hamiltonian, k=1, which="SA", tol=1e-14)
        e0, psi = values[0], vectors[:, 0]
    pivot = psi[np.argmax(np.abs(psi))]
    psi = psi * np.conj(pivot) / abs(pivot)
    return float(e0), psi.astype(complex)


def as_ml_state(
    psi: np.ndarray, model: MixtureModel, basis: FullCIBasis, t: float = 0.0
) -> MLState:
    """Express a full-CI vector as an ML state with C = I and Φ = modes.

    Raises:
        ValueError: If the model's (m, M) do not match the full-CI basis
    """
    for sigma, species in enumerate(model.spec.species):
        k, D = basis.modes[sigma].shape[0], basis.dims[sigma]
        if species.spfs != k or species.species_states != D:
            raise ValueError(
                f"species {species.name}: full-CI mapping needs m={k} and M={D}"
            )
    return MLState(
        a=np.asarray(psi, dtype=complex).reshape(basis.dims),
        coeffs=tuple(np.eye(d, dtype=complex) for d in basis.dims),
        spfs=tuple(m.copy() for m in basis.modes),
        time=float(t),
    )


def gp_rhs(model: MixtureModel, orbitals: np.ndarray) -> np.ndarray:
    """-i × coupled Gross-Pitaevskii operator applied to one orbital per species."""
    species = model.spec.species
    density = np.abs(orbitals) ** 2 / model.grid.weights
    out = np.empty_like(orbitals)
    for sigma, s in enumerate(species):
        potential = s.g * (s.particles - 1) * density[sigma]
        for partner, other in enumerate(species):
            if partner != sigma:
                g = model.spec.coupling(sigma, partner)
                potential = potential + g * other.particles * density[partner]
        out[sigma] = (
            model.one_body[sigma] @ orbitals[sigma] + potential * orbitals[sigma]
        )
    return -1j * out


def gp_propagate(
    model: MixtureModel,
    orbitals: np.ndarray,
    times: Sequence[float],
    atol: float = 1e-12,
    rtol: float = 1e-12,
) -> np.ndarray:
    """Propagate one normalized orbital per species under the coupled GP equations.

    Args:
        model: Mixture supplying traps and couplings
        orbitals: DVR coefficient rows, shape (S, n)
        times: Sample times (first entry is the initial time)

    Returns:
        Array of shape (len(times), S, n)

    Raises:
        ConfigError: If the orbital array has the wrong shape
        NumericalError: If the integrator fails
    """
    orbitals = np.asarray(orbitals, dtype=complex)
    if orbitals.shape != (model.S, model.grid.n):
        raise ConfigError(
            "GP propagation needs one orbital per species, "
            f"shape {(model.S, model.grid.n)}"
        )
    norms = np.linalg.norm(orbitals, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("GP orbitals must be normalized")
    times = np.asarray(times, dtype=float)
    shape = orbitals.shape

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return gp_rhs(model, y.reshape(shape)).ravel()

    sol = solve_ivp(
        rhs,
        (times[0], times[-1]),
        orbitals.ravel(),
        method="DOP853",
        t_eval=times,
        atol=atol,
        rtol=rtol,
    )
    if not sol.success:
        raise NumericalError(f"GP propagation failed: {sol.message}")
    return sol.y.T.reshape((len(times),) + shape)
