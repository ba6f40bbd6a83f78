"""Spatial representation: DVR grids, trap potentials and one-body operators.

SPFs are stored as DVR coefficient vectors with the Euclidean inner
product; the function value at node ``i`` is ``coeff[i] / sqrt(w[i])``.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import ConfigError

GRID_KINDS = ("harmonic", "sine")


@dataclass(frozen=True, eq=False)
class Grid:
    """A one-dimensional DVR.

    Attributes:
        kind: "harmonic" or "sine"
        nodes: Strictly increasing node positions (harmonic-oscillator units)
        weights: Strictly positive quadrature weights
        kinetic: Real symmetric kinetic-energy matrix p^2/2 (unit mass)
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    kinetic: np.ndarray

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        """Function values at the nodes of DVR coefficient vectors (last axis)."""
        return coeffs / np.sqrt(self.weights)

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """DVR coefficient vectors of functions sampled at the nodes."""
        return values * np.sqrt(self.weights)


@dataclass(frozen=True)
class TrapSpec:
    """Harmonic trap with a central Gaussian barrier and an optional step.

    U(x) = harmonic * x^2/2 + h/sqrt(2 pi s^2) exp(-x^2/2s^2) + H_b * [x > 0]
    """

    harmonic: float = 1.0
    barrier_height: float = 0.0
    barrier_width: float = 1.0
    block_height: float = 0.0

    def __post_init__(self) -> None:
        if self.harmonic <= 0:
            raise ConfigError("harmonic prefactor must be positive")
        if self.barrier_height < 0:
            raise ConfigError("barrier height must be non-negative")
        if self.barrier_width <= 0:
            raise ConfigError("barrier width must be positive")
        if self.block_height < 0:
            raise ConfigError("block height must be non-negative")

    def potential(self, x: np.ndarray) -> np.ndarray:
        """Evaluate U(x)."""
        x = np.asarray(x, dtype=float)
        s2 = self.barrier_width**2
        u = 0.5 * self.harmonic * x**2
        if self.barrier_height:
            u = u + self.barrier_height / np.sqrt(2.0 * np.pi * s2) * np.exp(
                -(x**2) / (2.0 * s2)
            )
        if self.block_height:
            u = u + self.block_height * (x > 0)
        return u

    def with_block(self, height: float) -> "TrapSpec":
        """Same trap with the right well blocked by a step of the given height."""
        return TrapSpec(self.harmonic, self.barrier_height, self.barrier_width, height)

    def without_block(self) -> "TrapSpec":
        return self.with_block(0.0)


def hermite_functions(xi: np.ndarray, count: int) -> np.ndarray:
    """Normalized Hermite functions h_0..h_{count-1} at points xi.

    Uses the three-term recurrence, which stays stable far into the tails.

    Returns:
        Array of shape (count, len(xi))
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty((count, xi.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    if count > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for k in range(1, count - 1):
        out[k + 1] = (
            np.sqrt(2.0 / (k + 1)) * xi * out[k] - np.sqrt(k / (k + 1.0)) * out[k - 1]
        )
    return out


def _harmonic_dvr(
    n: int, frequency: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Position operator in the oscillator basis is tridiagonal; its eigenvectors
    # define the DVR. The kinetic matrix is built from the exact oscillator
    # energies so that the matching harmonic trap is represented exactly.
    off = np.sqrt(np.arange(1, n) / 2.0)
    xi, u = eigh_tridiagonal(np.zeros(n), off)
    xi = 0.5 * (xi - xi[::-1])
    energies = np.arange(n) + 0.5
    t_xi = (u.T * energies) @ u - np.diag(0.5 * xi**2)
    t_xi = 0.5 * (t_xi + t_xi.T)
    # Christoffel numbers times exp(xi^2): 1 / sum_k h_k(xi)^2
    w_xi = 1.0 / np.sum(hermite_functions(xi, n) ** 2, axis=0)
    scale = np.sqrt(frequency)
    return xi / scale, w_xi / scale, frequency * t_xi


def _sine_dvr(n: int, half_width: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    length = 2.0 * half_width
    spacing = length / (n + 1)
    nodes = -half_width + spacing * np.arange(1, n + 1)
    k = np.arange(1, n + 1)
    u = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(k, k) * np.pi / (n + 1))
    energies = 0.5 * (k * np.pi / length) ** 2
    kinetic = (u * energies) @ u.T
    kinetic = 0.5 * (kinetic + kinetic.T)
    return nodes, np.full(n, spacing), kinetic


def build_grid(
    kind: str = "harmonic",
    n: int = 250,
    frequency: float = 1.0,
    half_width: float = 10.0,
) -> Grid:
    """Build a DVR grid.

    Args:
        kind: "harmonic" (Hermite DVR) or "sine" (box DVR on [-half_width, half_width])
        n: Number of grid points
        frequency: Oscillator frequency the harmonic DVR is adapted to
        half_width: Box half width of the sine DVR

    Returns:
        Grid with symmetric kinetic matrix and positive weights

    Raises:
        ConfigError: If the point count or extent is invalid
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ConfigError(f"grid point count must be an integer >= 2, got {n!r}")
    if kind == "harmonic":
        if frequency <= 0:
            raise ConfigError("harmonic DVR frequency must be positive")
        nodes, weights, kinetic = _harmonic_dvr(int(n), float(frequency))
    elif kind == "sine":
        if half_width <= 0:
            raise ConfigError("sine DVR half width must be positive")
        nodes, weights, kinetic = _sine_dvr(int(n), float(half_width))
    else:
        raise ConfigError(
            f"unknown grid kind {kind!r}. Valid kinds: {', '.join(GRID_KINDS)}"
        )
    return Grid(kind=kind, nodes=nodes, weights=weights, kinetic=kinetic)


def one_body_hamiltonian(grid: Grid, trap: TrapSpec) -> np.ndarray:
    """Kinetic matrix plus the trap potential on the diagonal."""
    h = grid.kinetic + np.diag(trap.potential(grid.nodes))
    return 0.5 * (h + h.T)


def eigenpairs(matrix: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Lowest eigenpairs of a real symmetric (or Hermitian) matrix.

    Args:
        matrix: Hermitian matrix of size n x n
        k: Number of eigenpairs, 1 <= k <= n

    Returns:
        Tuple (energies ascending, vectors) where ``vectors`` has shape (k, n)
        and each row has its largest-magnitude component real positive.

    Raises:
        ValueError: If k is out of range
    """
    n = matrix.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"requested {k} eigenpairs of a {n}x{n} matrix")
    energies, vectors = eigh(matrix, subset_by_index=[0, k - 1])
    vectors = vectors.T.copy()
    for row in vectors:
        pivot = row[np.argmax(np.abs(row))]
        row *= np.conj(pivot) / abs(pivot)
    return energies, vectors
