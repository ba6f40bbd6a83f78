"""The three-layer ML-MCTDHB wavefunction.

An MLState holds the top tensor A (shape M_1 x ... x M_S), one species
coefficient matrix C per species (M x D, rows in the number basis) and one
SPF array Phi per species (m x n, rows are DVR coefficient vectors).
"""

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional, Sequence, Tuple

import numpy as np

from .errors import NumericalError
from .grid import eigenpairs

if TYPE_CHECKING:
    from .models import MixtureModel


@dataclass(frozen=True, eq=False)
class MLState:
    """Snapshot of the wavefunction at one (real or imaginary) time.

    Attributes:
        a: Complex top-layer tensor of shape (M_1, ..., M_S)
        coeffs: Species-layer matrices C^σ of shape (M_σ, D_σ)
        spfs: Particle-layer arrays Φ^σ of shape (m_σ, n)
        time: Current time t or imaginary-time parameter τ
    """

    a: np.ndarray
    coeffs: Tuple[np.ndarray, ...]
    spfs: Tuple[np.ndarray, ...]
    time: float = 0.0

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.a.ndim or len(self.spfs) != self.a.ndim:
            raise ValueError("A must have one axis per species layer")
        for sigma, (c, phi) in enumerate(zip(self.coeffs, self.spfs)):
            if c.shape[0] != self.a.shape[sigma]:
                raise ValueError(
                    f"species {sigma}: C has {c.shape[0]} rows, A axis has "
                    f"{self.a.shape[sigma]}"
                )
            if phi.ndim != 2:
                raise ValueError(f"species {sigma}: SPF array must be 2-D")

    @property
    def S(self) -> int:
        return self.a.ndim

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(self.a.shape)

    def copy(self) -> "MLState":
        return MLState(
            a=self.a.copy(),
            coeffs=tuple(c.copy() for c in self.coeffs),
            spfs=tuple(p.copy() for p in self.spfs),
            time=self.time,
        )

    def with_time(self, time: float) -> "MLState":
        return replace(self, time=float(time))

    @property
    def layout(self) -> Tuple[Tuple[int, ...], ...]:
        """Shapes of every block in ``to_vector`` order."""
        return (
            (tuple(self.a.shape),)
            + tuple(tuple(c.shape) for c in self.coeffs)
            + tuple(tuple(p.shape) for p in self.spfs)
        )

    def to_vector(self) -> np.ndarray:
        """Concatenate A, every C and every Φ into one complex vector."""
        parts = [self.a.ravel()]
        parts += [c.ravel() for c in self.coeffs]
        parts += [p.ravel() for p in self.spfs]
        return np.concatenate(parts).astype(complex, copy=False)

    def from_vector(
        self, vector: np.ndarray, time: Optional[float] = None
    ) -> "MLState":
        """Inverse of ``to_vector`` using this state's block shapes."""
        blocks = []
        offset = 0
        for shape in self.layout:
            size = int(np.prod(shape))
            blocks.append(np.asarray(vector[offset : offset + size]).reshape(shape))
            offset += size
        if offset != vector.size:
            raise ValueError(
                f"vector length {vector.size} does not match layout {offset}"
            )
        S = self.S
        return MLState(
            a=blocks[0],
            coeffs=tuple(blocks[1 : 1 + S]),
            spfs=tuple(blocks[1 + S :]),
            time=self.time if time is None else float(time),
        )


def init_hartree(
    model: "MixtureModel", orbitals: Optional[Sequence[np.ndarray]] = None
) -> MLState:
    """All bosons of every species condensed in the lowest orbital.

    Args:
        model: Mixture whose one-body Hamiltonians supply the orbitals
        orbitals: Optional per-species orbital sources (rows orthonormal);
            defaults to the lowest one-body eigenvectors of each species' trap

    Returns:
        State with Φ = lowest m orbitals, C rows = number states 0..M-1
        (row 0 the condensate) and A the unit tensor on index (0, ..., 0)

    Raises:
        ValueError: If an orbital source provides fewer than m vectors
    """
    coeffs = []
    spfs = []
    for sigma, species in enumerate(model.spec.species):
        m, M = species.spfs, species.species_states
        if orbitals is None:
            _, source = eigenpairs(model.one_body[sigma], m)
        else:
            source = np.asarray(orbitals[sigma])
        if source.shape[0] < m:
            raise ValueError(
                f"species {species.name}: orbital source provides {source.shape[0]} "
                f"vectors, {m} required"
            )
        spfs.append(np.array(source[:m], dtype=complex))
        coeffs.append(np.eye(M, model.bases[sigma].size, dtype=complex))
    a = np.zeros(model.dims, dtype=complex)
    a[(0,) * model.S] = 1.0
    return MLState(a=a, coeffs=tuple(coeffs), spfs=tuple(spfs))


def _orthonormal_rows(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # matrix^T = Q R with diag(R) real positive; returns (Q^T, R)
    q, r = np.linalg.qr(matrix.T)
    phase = np.exp(1j * np.angle(np.diagonal(r)))
    q = q * phase
    r = np.conj(phase)[:, None] * r
    return q.T, r


def init_random(model: "MixtureModel", seed: int = 0, spread: int = 2) -> MLState:
    """Random normalized state with orthonormal layers.

    SPFs are random unitary mixtures of the lowest ``m + spread`` one-body
    eigenvectors; species states and A are complex Gaussian draws.
    """
    rng = np.random.default_rng(seed)
    coeffs = []
    spfs = []
    n = model.grid.n
    for sigma, species in enumerate(model.spec.species):
        m, M = species.spfs, species.species_states
        k = min(n, m + spread)
        _, source = eigenpairs(model.one_body[sigma], k)
        mix = rng.normal(size=(m, k)) + 1j * rng.normal(size=(m, k))
        phi, _ = _orthonormal_rows(mix @ source)
        spfs.append(phi)
        D = model.bases[sigma].size
        raw = rng.normal(size=(M, D)) + 1j * rng.normal(size=(M, D))
        c, _ = _orthonormal_rows(raw)
        coeffs.append(c)
    a = rng.normal(size=model.dims) + 1j * rng.normal(size=model.dims)
    a = a / np.linalg.norm(a)
    return MLState(a=a, coeffs=tuple(coeffs), spfs=tuple(spfs))


def norm(state: MLState) -> float:
    """‖Ψ‖ = ‖A‖ (lower layers are orthonormal)."""
    return float(np.linalg.norm(state.a))


def normalize(state: MLState) -> MLState:
    """Rescale A to unit norm.

    Raises:
        NumericalError: If the state has zero norm
    """
    value = norm(state)
    if value == 0.0 or not np.isfinite(value):
        raise NumericalError(f"cannot normalize a state of norm {value}")
    return replace(state, a=state.a / value)


def orthonormality_residual(state: MLState) -> float:
    """Worst ‖XX† − I‖_max over all C and Φ layers."""
    worst = 0.0
    for x in state.coeffs + state.spfs:
        gram = x @ np.conj(x.T)
        worst = max(worst, float(np.max(np.abs(gram - np.eye(x.shape[0])))))
    return worst


def reorthonormalize(state: MLState) -> MLState:
    """Restore layer orthonormality by QR.

    Species states are re-orthonormalized with the triangular factor folded
    back into A, so the represented wavefunction is unchanged. SPFs are
    Gram-Schmidt orthonormalized in place.
    """
    a = state.a
    coeffs = []
    for sigma, c in enumerate(state.coeffs):
        c_new, r = _orthonormal_rows(c)
        # A'_{i'} = Σ_i R_{i'i} A_i along axis σ
        a = np.moveaxis(np.tensordot(r, a, axes=(1, sigma)), 0, sigma)
        coeffs.append(c_new)
    spfs = tuple(_orthonormal_rows(phi)[0] for phi in state.spfs)
    return replace(state, a=a, coeffs=tuple(coeffs), spfs=spfs)


def energy(state: MLState, model: "MixtureModel") -> float:
    """⟨Ψ|H|Ψ⟩ assembled from the top-layer Hamiltonian.

    Raises:
        NumericalError: If the assembled energy has a non-negligible imaginary part
    """
    from .densities import species_transitions
    from .meanfield import build_mean_fields

    transitions = species_transitions(state, model)
    fields = build_mean_fields(state, model, transitions)
    value = np.vdot(state.a, fields.top.apply(state.a))
    scale = max(1.0, abs(value))
    if abs(value.imag) > 1e-8 * scale:
        raise NumericalError(f"energy has imaginary part {value.imag:.3e}")
    return float(value.real)
