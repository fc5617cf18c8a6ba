"""Dense state-vector and density-matrix primitives.

Qubit ordering used everywhere in this package: qubit ``k`` is bit ``k`` of the
basis-state index (qubit 0 is the least significant bit).  A k-qubit gate
applied to ``targets`` reads ``targets[0]`` as the least significant bit of the
gate's own row/column index.

States are plain ``complex128`` numpy arrays of length ``2**n``.  Kernels accept
arbitrary leading batch axes and act on the last axis only, so a stack of
states (trajectories, low-rank columns, rows of a density matrix) goes through
the same code path.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "HADAMARD",
    "IDENTITY",
    "num_qubits",
    "basis_state",
    "zero_state",
    "cphase_matrix",
    "is_unitary",
    "apply_gate",
    "apply_gate_batch",
    "apply_gate_density",
    "apply_diagonal",
    "embed_operator",
    "overlap_fidelity",
    "pure_vs_mixed_fidelity",
    "haar_random_state",
    "haar_random_states",
    "random_unitary",
    "density_from_state",
]

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
IDENTITY = np.eye(2, dtype=complex)


def num_qubits(dim: int) -> int:
    """Return n for a Hilbert space dimension 2**n, raising on anything else."""
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def basis_state(n: int, index: int) -> np.ndarray:
    if not 0 <= index < 2**n:
        raise ValueError(f"basis index {index} out of range for n={n}")
    psi = np.zeros(2**n, dtype=complex)
    psi[index] = 1.0
    return psi


def zero_state(n: int) -> np.ndarray:
    return basis_state(n, 0)


def cphase_matrix(theta: float) -> np.ndarray:
    """Controlled-phase diag(1, 1, 1, exp(-i*theta))."""
    return np.diag([1.0, 1.0, 1.0, np.exp(-1j * theta)]).astype(complex)


def is_unitary(gate: np.ndarray, atol: float = 1e-12) -> bool:
    gate = np.asarray(gate)
    if gate.ndim != 2 or gate.shape[0] != gate.shape[1]:
        return False
    return np.allclose(gate.conj().T @ gate, np.eye(gate.shape[0]), atol=atol, rtol=0)


def _check_targets(n: int, targets, arity: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(targets) != arity:
        raise ValueError(f"gate acts on {arity} qubit(s) but {len(targets)} target(s) given")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target in {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise ValueError(f"target {t} out of range for n={n}")
    return targets


def _gate_arity(gate: np.ndarray) -> int:
    if gate.ndim != 2 or gate.shape[0] != gate.shape[1]:
        raise ValueError(f"gate must be square, got shape {gate.shape}")
    return num_qubits(gate.shape[0])


def apply_gate(state: np.ndarray, gate: np.ndarray, targets) -> np.ndarray:
    """Apply a k-qubit ``gate`` to ``targets`` of ``state``.

    ``state`` may carry leading batch axes; the gate acts on the last axis.
    The full 2**n x 2**n operator is never formed.  Returns a new array.
    """
    state = np.asarray(state, dtype=complex)
    gate = np.asarray(gate, dtype=complex)
    n = num_qubits(state.shape[-1])
    k = _gate_arity(gate)
    targets = _check_targets(n, targets, k)
    lead = state.shape[:-1]
    nb = len(lead)

    psi = state.reshape(lead + (2,) * n)
    # C-order reshape: qubit q lives on tensor axis nb + (n - 1 - q).
    # Gate tensor axes are (out_{k-1}..out_0, in_{k-1}..in_0).
    state_axes = [nb + n - 1 - t for t in reversed(targets)]
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), state_axes))
    # tensordot puts the k output axes first; move them back into place.
    out = np.moveaxis(out, list(range(k)), state_axes)
    return out.reshape(state.shape)


def apply_gate_batch(states: np.ndarray, gates: np.ndarray, target: int) -> np.ndarray:
    """Apply a different 2x2 gate to each row of ``states`` on one qubit.

    ``states`` has shape (B, 2**n) and ``gates`` shape (B, 2, 2).  Each output
    row depends only on its own input row and gate.
    """
    b, dim = states.shape
    n = num_qubits(dim)
    _check_targets(n, (target,), 1)
    lo = 1 << target
    psi = states.reshape(b, dim // (2 * lo), 2, lo)
    out = np.einsum("bij,bhjl->bhil", gates, psi)
    return out.reshape(b, dim)


def apply_diagonal(state: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Multiply by a full-register diagonal operator given as a length-2**n vector."""
    return np.asarray(state, dtype=complex) * diag


def apply_gate_density(rho: np.ndarray, gate: np.ndarray, targets) -> np.ndarray:
    """Return U rho U^dagger with U the gate embedded on ``targets``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    # rows of rho.T are columns of rho, so this is U rho
    left = apply_gate(rho.T, gate, targets).T
    # (U rho) U^dag = conj(U conj(U rho)) with U acting on the row index
    return apply_gate(left.conj(), gate, targets).conj()


def embed_operator(gate: np.ndarray, targets, n: int) -> np.ndarray:
    """Full 2**n x 2**n matrix of ``gate`` acting on ``targets``.

    Built column by column from basis states; O(4**n) memory, meant for small
    n and for cross-checking the strided kernels.
    """
    gate = np.asarray(gate, dtype=complex)
    _check_targets(n, targets, _gate_arity(gate))
    return apply_gate(np.eye(2**n, dtype=complex), gate, targets).T


def overlap_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for two normalized pure states."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"state shapes differ: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def pure_vs_mixed_fidelity(psi: np.ndarray, rho: np.ndarray) -> float:
    """<psi|rho|psi>.  ``rho`` may be sub-normalized."""
    psi = np.asarray(psi)
    rho = np.asarray(rho)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError(f"rho shape {rho.shape} does not match state length {psi.shape[0]}")
    val = np.vdot(psi, rho @ psi)
    return float(val.real)


def density_from_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def haar_random_states(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` Haar-random n-qubit states, one per row.

    Normalized complex Gaussian vectors are unitarily invariant in law.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dim = 2**n
    z = rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_random_state(n: int, seed=None) -> np.ndarray:
    """A single Haar-random n-qubit state; ``seed`` may be an int or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return haar_random_states(n, 1, rng)[0]


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
