"""Fixed-rank evolution of a density matrix held as rho = sum_k c_k c_k^dag.

Two ways of pushing a factor through a noise channel:

``apply_channel_truncate``
    Apply every Kraus operator to every column, then keep the ``rank`` largest
    eigencomponents of the resulting density.  The eigenproblem is solved on
    the small Gram matrix of candidate columns, never on the 2**n x 2**n
    density.  Output depends only on the channel, not on its Kraus
    representation.

``apply_branch``
    Follow a single Kraus operator (the dominant one by default).  The trace
    shrinks by that branch's weight; this depends on which Kraus
    representation is used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .noise import KrausSet
from .qcore import apply_gate, num_qubits

__all__ = [
    "EIG_CLIP",
    "LowRankFactor",
    "init_pure",
    "apply_ideal_gate",
    "apply_channel_truncate",
    "apply_branch",
    "surviving_trace",
]

EIG_CLIP = 1e-14


@dataclass(frozen=True)
class LowRankFactor:
    """Column factor of a (sub-normalized) density matrix.

    ``vecs`` has shape (m, 2**n): row k is the column vector c_k.  ``rank`` is
    the cap applied by truncation; m never exceeds it after a truncation.
    """

    vecs: np.ndarray
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank cap must be >= 1")
        vecs = np.asarray(self.vecs, dtype=complex)
        if vecs.ndim != 2:
            raise ValueError("vecs must be a 2-D array of shape (m, 2**n)")
        num_qubits(vecs.shape[1])
        object.__setattr__(self, "vecs", vecs)

    @property
    def n(self) -> int:
        return num_qubits(self.vecs.shape[1])

    @property
    def num_columns(self) -> int:
        return self.vecs.shape[0]

    def density(self) -> np.ndarray:
        return self.vecs.T @ self.vecs.conj()

    def fidelity(self, psi: np.ndarray) -> float:
        """<psi|rho|psi> without forming rho."""
        amps = self.vecs.conj() @ psi
        return float(np.sum(np.abs(amps) ** 2))


def init_pure(state: np.ndarray, rank: int) -> LowRankFactor:
    state = np.asarray(state, dtype=complex)
    return LowRankFactor(state[None, :].copy(), rank)


def apply_ideal_gate(factor: LowRankFactor, gate: np.ndarray, targets) -> LowRankFactor:
    return replace(factor, vecs=apply_gate(factor.vecs, gate, targets))


def _candidates(factor: LowRankFactor, kraus: KrausSet, targets) -> np.ndarray:
    if kraus.arity != len(tuple(targets)):
        raise ValueError(
            f"Kraus set acts on {kraus.arity} qubit(s) but {len(tuple(targets))} target(s) given"
        )
    return np.concatenate([apply_gate(factor.vecs, op, targets) for op in kraus], axis=0)


def apply_channel_truncate(factor: LowRankFactor, kraus: KrausSet, targets) -> LowRankFactor:
    """Apply the channel exactly, then keep the top ``factor.rank`` eigencomponents.

    Candidates are ordered Kraus-major (all columns through E_0, then E_1, ...).
    Ties at the cutoff are broken toward lower candidate index.
    """
    cand = _candidates(factor, kraus, targets)
    gram = cand.conj() @ cand.T
    gram = 0.5 * (gram + gram.conj().T)
    evals, evecs = np.linalg.eigh(gram)
    # eigh sorts ascending; a stable sort on -evals keeps ties in index order
    order = np.argsort(-evals, kind="stable")
    keep = [i for i in order[: factor.rank] if evals[i] > EIG_CLIP]
    if not keep:
        keep = [order[0]]
    # column  sum_a v_a K_a  has squared norm v^dag G v = eigenvalue
    new = evecs[:, keep].T @ cand
    return replace(factor, vecs=new)


def apply_branch(factor: LowRankFactor, kraus: KrausSet, targets, branch_index: int = 0) -> LowRankFactor:
    if not 0 <= branch_index < len(kraus):
        raise IndexError(f"branch index {branch_index} out of range for {len(kraus)} operators")
    if kraus.arity != len(tuple(targets)):
        raise ValueError("Kraus arity does not match target count")
    return replace(factor, vecs=apply_gate(factor.vecs, kraus[branch_index], targets))


def surviving_trace(factor: LowRankFactor) -> float:
    return float(np.sum(np.abs(factor.vecs) ** 2))
