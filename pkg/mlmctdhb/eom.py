"""Right-hand sides of the coupled top, species and particle layer equations."""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .densities import DensitySet, compute_density_set, regularized_inverse
from .meanfield import (
    DENSE_TOP_LIMIT,
    MeanFieldSet,
    TopHamiltonian,
    apply_one_body,
    build_mean_fields,
)
from .models import MixtureModel
from .state import MLState

MODES = ("real", "imaginary")
DEFAULT_REGULARIZATION = 1e-10


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of every layer, laid out like MLState."""

    a: np.ndarray
    coeffs: Tuple[np.ndarray, ...]
    spfs: Tuple[np.ndarray, ...]

    def to_vector(self) -> np.ndarray:
        parts = [self.a.ravel()]
        parts += [c.ravel() for c in self.coeffs]
        parts += [p.ravel() for p in self.spfs]
        return np.concatenate(parts).astype(complex, copy=False)


def _project_out(y: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # (1 - Σ_s |x_s><x_s|) applied to every row of y
    return y - (y @ np.conj(rows.T)) @ rows


def rhs_top(state: MLState, top: TopHamiltonian) -> np.ndarray:
    """dA = -i H^top A."""
    return -1j * top.apply(state.a)


def rhs_species(
    state: MLState,
    fields: MeanFieldSet,
    densities: DensitySet,
    eta_inverses: Sequence[np.ndarray],
) -> Tuple[np.ndarray, ...]:
    """dC^σ for every species."""
    out = []
    for sigma, c in enumerate(state.coeffs):
        actions = densities.transitions[sigma].actions
        hpsi = np.tensordot(fields.h[sigma], actions.one_body, axes=([0, 1], [0, 1]))
        hpsi = hpsi + 0.5 * np.tensordot(
            fields.v[sigma], actions.two_body, axes=([0, 1, 2, 3], [0, 1, 2, 3])
        )
        # G[j, k, s, t] = Σ_{σ'} Σ_{uv} eta2[s, u, t, v] w^{jk}_{uv}
        weights = sum(
            np.tensordot(
                fields.w[(sigma, partner)],
                densities.eta2[(sigma, partner)],
                axes=([2, 3], [1, 3]),
            )
            for partner in range(state.S)
            if partner != sigma
        )
        total = hpsi
        if state.S > 1:
            m, M = weights.shape[0], weights.shape[2]
            stacked = np.moveaxis(weights, 2, 0).reshape(M, m * m * M)
            coupling = stacked @ actions.one_body.reshape(m * m * M, -1)
            total = total + eta_inverses[sigma] @ coupling
        out.append(-1j * _project_out(total, c))
    return tuple(out)


def rhs_spf(
    state: MLState,
    model: MixtureModel,
    fields: MeanFieldSet,
    densities: DensitySet,
    rho_inverses: Sequence[np.ndarray],
) -> Tuple[np.ndarray, ...]:
    """dΦ^σ for every species."""
    out = []
    for sigma, phi in enumerate(state.spfs):
        # U[j, q, i] = Σ_{kp} rho2[j, k, q, p] field[k, p, i], over all sources
        potential = np.zeros((phi.shape[0], phi.shape[0], phi.shape[1]), complex)
        rho2 = densities.rho2_same[sigma]
        if rho2 is not None:
            potential += np.tensordot(rho2, fields.vhat[sigma], axes=([1, 3], [0, 1]))
        for partner in range(state.S):
            if partner == sigma:
                continue
            potential += np.tensordot(
                densities.rho2_cross[(sigma, partner)],
                fields.what[(sigma, partner)],
                axes=([1, 3], [0, 1]),
            )
        interaction = np.sum(potential * phi[None, :, :], axis=1)
        total = apply_one_body(model.one_body[sigma], phi)
        total = total + rho_inverses[sigma] @ interaction
        out.append(-1j * _project_out(total, phi))
    return tuple(out)


def full_rhs(
    state: MLState,
    model: MixtureModel,
    mode: str = "real",
    regularization: float = DEFAULT_REGULARIZATION,
    dense_limit: int = DENSE_TOP_LIMIT,
) -> StateDerivative:
    """Derivative of every layer from one consistent snapshot.

    Args:
        state: Current wavefunction
        model: Mixture the state belongs to
        mode: "real" for i∂_t, "imaginary" for -∂_τ (RHS multiplied by -i)
        regularization: Eigenvalue floor of the density inverses
        dense_limit: Largest top-layer dimension materialized densely

    Raises:
        ValueError: If the mode is unknown
    """
    if mode not in MODES:
        raise ValueError(f"unknown propagation mode {mode!r}. Valid modes: {MODES}")
    densities = compute_density_set(state, model)
    eta_inverses = [regularized_inverse(e, regularization) for e in densities.eta1]
    rho_inverses = [regularized_inverse(r, regularization) for r in densities.rho1]
    fields = build_mean_fields(state, model, densities.transitions, dense_limit)
    da = rhs_top(state, fields.top)
    dcs = rhs_species(state, fields, densities, eta_inverses)
    dphis = rhs_spf(state, model, fields, densities, rho_inverses)
    if mode == "imaginary":
        da = -1j * da
        dcs = tuple(-1j * x for x in dcs)
        dphis = tuple(-1j * x for x in dphis)
    return StateDerivative(a=da, coeffs=dcs, spfs=dphis)
