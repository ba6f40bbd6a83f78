"""Occupation-number bases and bosonic ladder-operator kernels.

Mode indices are zero-based throughout. Operators act on the last axis of
coefficient arrays, so a stack of species states (rows of C) is handled in
one call.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import BasisOverflowError

INT64_MAX = 2**63 - 1

# One ladder step: (mode, +1 for creation / -1 for annihilation), applied in order.
LadderOp = Tuple[Tuple[int, int], ...]


def basis_size(N: int, m: int) -> int:
    """Number of occupation vectors of N bosons in m modes, (N+m-1)!/[N!(m-1)!].

    Raises:
        ValueError: If N < 0 or m < 1
        BasisOverflowError: If the size does not fit a signed 64-bit integer
    """
    if N < 0 or m < 1:
        raise ValueError(f"basis needs N >= 0 and m >= 1, got N={N}, m={m}")
    size = math.comb(N + m - 1, m - 1)
    if size > INT64_MAX:
        raise BasisOverflowError(f"basis size for N={N}, m={m} exceeds 2^63-1")
    return size


def _compositions(N: int, m: int) -> Iterator[Tuple[int, ...]]:
    if m == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in _compositions(N - first, m - 1):
            yield (first,) + rest


class NumberBasis:
    """Occupation-number basis for N bosons in m modes.

    States are ordered descending lexicographically, so the condensate
    (N, 0, ..., 0) has index 0. ``index_of`` is a combinatorial ranking and
    inverts the enumeration exactly.
    """

    def __init__(self, N: int, m: int) -> None:
        self.N = int(N)
        self.m = int(m)
        self.size = basis_size(self.N, self.m)
        self.states = np.array(list(_compositions(self.N, self.m)), dtype=np.int64)
        self.states.setflags(write=False)
        # binom[a, b] = C(a, b) for the ranking sum
        rows = self.N + self.m
        self._binom = np.array(
            [[math.comb(a, b) for b in range(self.m)] for a in range(rows)],
            dtype=np.int64,
        )
        self._tables: Dict[LadderOp, Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._stacks: Dict[int, sp.csr_matrix] = {}

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"NumberBasis(N={self.N}, m={self.m}, size={self.size})"

    def index_of(self, occupations: Sequence) -> np.ndarray:
        """Rank of one occupation vector (returns int) or of a stack of them.

        Raises:
            ValueError: If a vector has the wrong length, negative entries or
                the wrong particle number
        """
        occ = np.asarray(occupations, dtype=np.int64)
        single = occ.ndim == 1
        occ = np.atleast_2d(occ)
        if occ.shape[1] != self.m:
            raise ValueError(f"occupation vectors must have length {self.m}")
        if np.any(occ < 0) or np.any(occ.sum(axis=1) != self.N):
            raise ValueError(f"occupations must be non-negative and sum to {self.N}")
        left = self.N - np.cumsum(occ, axis=1)
        rank = np.zeros(occ.shape[0], dtype=np.int64)
        for j in range(self.m - 1):
            rank += self._binom[left[:, j] + self.m - j - 2, self.m - j - 1]
        return int(rank[0]) if single else rank

    def ladder_table(self, ops: LadderOp) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Scatter table (source index, target index, amplitude) of a ladder string.

        ``ops`` lists (mode, +1|-1) steps in the order they act on a ket.
        """
        cached = self._tables.get(ops)
        if cached is not None:
            return cached
        occ = self.states.copy()
        amp = np.ones(self.size)
        valid = np.ones(self.size, dtype=bool)
        for mode, sign in ops:
            if not 0 <= mode < self.m:
                raise ValueError(f"mode index {mode} out of range for m={self.m}")
            if sign < 0:
                valid &= occ[:, mode] > 0
                amp *= np.sqrt(np.maximum(occ[:, mode], 0))
                occ[:, mode] -= 1
            else:
                amp *= np.sqrt(np.maximum(occ[:, mode] + 1, 0))
                occ[:, mode] += 1
        source = np.flatnonzero(valid)
        target = (
            self.index_of(occ[valid]) if source.size else np.zeros(0, dtype=np.int64)
        )
        table = (source, target, amp[valid])
        self._tables[ops] = table
        return table

    def operator_stack(self, rank: int) -> sp.csr_matrix:
        """Every one-body (rank 1) or two-body (rank 2) string stacked row-wise.

        Row block ``[j, k]`` (or ``[j, k, q, p]``) in C order holds the D x D
        matrix of a†_j a_k (or a†_j a†_k a_q a_p), so one sparse product
        applies all strings to a stack of coefficient columns.
        """
        cached = self._stacks.get(rank)
        if cached is not None:
            return cached
        strings = list(itertools.product(range(self.m), repeat=2 * rank))
        rows, cols, vals = [], [], []
        if rank == 1 or self.N >= 2:
            for block, index in enumerate(strings):
                ops = _hop_ops(*index) if rank == 1 else _two_body_ops(*index)
                source, target, amp = self.ladder_table(ops)
                rows.append(block * self.size + target)
                cols.append(source)
                vals.append(amp)
        shape = (len(strings) * self.size, self.size)
        if rows:
            stack = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=shape,
            )
        else:
            stack = sp.csr_matrix(shape)
        self._stacks[rank] = stack
        return stack

    def apply(self, ops: LadderOp, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        if coeffs.shape[-1] != self.size:
            raise ValueError(
                f"coefficient length {coeffs.shape[-1]} does not match "
                f"basis size {self.size}"
            )
        source, target, amp = self.ladder_table(ops)
        out = np.zeros(coeffs.shape, dtype=np.result_type(coeffs.dtype, float))
        out[..., target] = amp * coeffs[..., source]
        return out


@lru_cache(maxsize=64)
def enumerate_basis(N: int, m: int) -> NumberBasis:
    """Cached NumberBasis for (N, m); bases are immutable after construction."""
    return NumberBasis(N, m)


def _hop_ops(j: int, k: int) -> LadderOp:
    return ((k, -1), (j, +1))


def _two_body_ops(j: int, k: int, q: int, p: int) -> LadderOp:
    return ((p, -1), (q, -1), (k, +1), (j, +1))


def apply_hopping(basis: NumberBasis, j: int, k: int, coeffs: np.ndarray) -> np.ndarray:
    """Apply a†_j a_k to coefficient vector(s) along the last axis."""
    return basis.apply(_hop_ops(j, k), coeffs)


def apply_two_body(
    basis: NumberBasis, j: int, k: int, q: int, p: int, coeffs: np.ndarray
) -> np.ndarray:
    """Apply a†_j a†_k a_q a_p to coefficient vector(s) along the last axis."""
    return basis.apply(_two_body_ops(j, k, q, p), coeffs)


def transition_element(
    basis: NumberBasis, c_u: np.ndarray, c_v: np.ndarray, j: int, k: int
) -> complex:
    """<psi_u| a†_j a_k |psi_v> for two coefficient vectors."""
    if c_u.shape != c_v.shape:
        raise ValueError("coefficient vectors must have equal length")
    return complex(np.vdot(c_u, apply_hopping(basis, j, k, c_v)))


def hopping_matrix(basis: NumberBasis, j: int, k: int) -> sp.csr_matrix:
    """Sparse matrix of a†_j a_k in the basis (used by the full-CI oracle)."""
    source, target, amp = basis.ladder_table(_hop_ops(j, k))
    return sp.csr_matrix((amp, (target, source)), shape=(basis.size, basis.size))


@dataclass(frozen=True)
class LadderActions:
    """One- and two-body operator strings applied to every species state.

    Attributes:
        one_body: Shape (m, m, M, D); [j, k] holds a†_j a_k C^T rows
        two_body: Shape (m, m, m, m, M, D); [j, k, q, p] holds a†_j a†_k a_q a_p
    """

    one_body: np.ndarray
    two_body: np.ndarray


def _apply_stack(basis: NumberBasis, rank: int, coeffs: np.ndarray) -> np.ndarray:
    if coeffs.shape[-1] != basis.size:
        raise ValueError(
            f"coefficient length {coeffs.shape[-1]} does not match "
            f"basis size {basis.size}"
        )
    columns = basis.operator_stack(rank) @ np.asarray(coeffs, dtype=complex).T
    shape = (basis.m,) * (2 * rank) + (basis.size, coeffs.shape[0])
    return np.ascontiguousarray(np.swapaxes(columns.reshape(shape), -1, -2))


def ladder_actions(basis: NumberBasis, coeffs: np.ndarray) -> LadderActions:
    """Apply every hopping and two-body string to the rows of ``coeffs``."""
    return LadderActions(
        one_body=_apply_stack(basis, 1, coeffs),
        two_body=_apply_stack(basis, 2, coeffs),
    )


def transition_tensors(
    coeffs: np.ndarray, actions: LadderActions
) -> Tuple[np.ndarray, np.ndarray]:
    """Matrix elements between species states.

    Returns:
        Tuple (tau1, tau2) with tau1[j, k, u, v] = <psi_u|a†_j a_k|psi_v> and
        tau2[j, k, q, p, u, v] = <psi_u|a†_j a†_k a_q a_p|psi_v>
    """
    bra = np.conj(coeffs).T
    tau1 = np.swapaxes(actions.one_body @ bra, -1, -2)
    tau2 = np.swapaxes(actions.two_body @ bra, -1, -2)
    return tau1, tau2
