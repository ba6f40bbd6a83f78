"""Shared builders and dense brute-force references for the test suite."""

from typing import Dict, Optional, Sequence

import numpy as np

from mlmctdhb.fock import NumberBasis
from mlmctdhb.grid import TrapSpec
from mlmctdhb.models import GridSpec, MixtureModel, MixtureSpec, SpeciesSpec
from mlmctdhb.state import MLState


def make_spec(
    particles: Sequence[int],
    spfs: Sequence[int],
    states: Sequence[int],
    g: Optional[Sequence[float]] = None,
    inter: float = 0.0,
    points: int = 12,
    trap: Optional[TrapSpec] = None,
) -> MixtureSpec:
    """A mixture of species "A", "B", ... with one uniform inter-species coupling."""
    names = "ABCDEFG"[: len(particles)]
    g = g if g is not None else [0.0] * len(particles)
    species = [
        SpeciesSpec(name, N, m, M, gs, trap or TrapSpec())
        for name, N, m, M, gs in zip(names, particles, spfs, states, g)
    ]
    couplings = {
        (names[a], names[b]): inter
        for a in range(len(names))
        for b in range(a + 1, len(names))
    }
    return MixtureSpec.create(species, couplings, GridSpec(points=points))


def make_model(*args, **kwargs) -> MixtureModel:
    return MixtureModel.build(make_spec(*args, **kwargs))


def dense_hopping(basis: NumberBasis, j: int, k: int) -> np.ndarray:
    """a†_j a_k built by explicit occupation bookkeeping."""
    index = {tuple(int(x) for x in s): i for i, s in enumerate(basis.states)}
    out = np.zeros((basis.size, basis.size))
    for col, state in enumerate(basis.states):
        occ = [int(x) for x in state]
        if occ[k] == 0:
            continue
        amp = np.sqrt(occ[k])
        occ[k] -= 1
        amp *= np.sqrt(occ[j] + 1)
        occ[j] += 1
        out[index[tuple(occ)], col] += amp
    return out


def dense_two_body(basis: NumberBasis, j: int, k: int, q: int, p: int) -> np.ndarray:
    """a†_j a†_k a_q a_p = a†_j a_p a†_k a_q - δ_kp a†_j a_q."""
    out = dense_hopping(basis, j, p) @ dense_hopping(basis, k, q)
    if k == p:
        out = out - dense_hopping(basis, j, q)
    return out


def full_tensor(state: MLState) -> np.ndarray:
    """The wavefunction expanded in the product of number bases."""
    psi = state.a
    for sigma, c in enumerate(state.coeffs):
        psi = np.moveaxis(np.tensordot(c.T, psi, axes=(1, sigma)), 0, sigma)
    return psi


def expectation(psi: np.ndarray, operators: Dict[int, np.ndarray]) -> complex:
    """<Ψ| ⊗_σ O_σ |Ψ> with identities on the axes not listed."""
    phi = psi
    for axis, op in operators.items():
        phi = np.moveaxis(np.tensordot(op, phi, axes=(1, axis)), 0, axis)
    return complex(np.vdot(psi, phi))


def left_localized(vectors: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """The normalized combination of two doublet states living in the left well."""
    plus = (vectors[0] + vectors[1]) / np.sqrt(2.0)
    minus = (vectors[0] - vectors[1]) / np.sqrt(2.0)
    left = nodes < 0
    if np.sum(np.abs(plus[left]) ** 2) >= np.sum(np.abs(minus[left]) ** 2):
        return plus
    return minus


def single_orbital_state(orbitals: Sequence[np.ndarray], t: float = 0.0) -> MLState:
    """m = M = 1 state holding one orbital per species."""
    S = len(orbitals)
    return MLState(
        a=np.ones((1,) * S, dtype=complex),
        coeffs=tuple(np.ones((1, 1), dtype=complex) for _ in range(S)),
        spfs=tuple(np.asarray(o, dtype=complex)[None, :] for o in orbitals),
        time=t,
    )

