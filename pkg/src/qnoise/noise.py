"""Gaussian over-rotation noise: Monte Carlo samplers, Kraus sets, Choi states.

Conventions
-----------
* A noisy gate is ``U_ideal @ V_noise``: the noise acts first.  Channels are
  composed the same way (noise channel, then ideal conjugation).
* The controlled-phase noise is diagonal and independent of the phase angle,
  so it is kept as a separate Kraus pair and the ideal phase is applied after.
* Superoperators use column-major vectorization, ``vec(A rho B) = (B^T kron A)
  vec(rho)``, hence ``S = sum_i conj(E_i) kron E_i``.
* Choi states are unit trace: ``(1/d) sum_ij |i><j| kron E(|i><j|)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qcore import apply_gate, cphase_matrix, is_unitary, num_qubits

__all__ = [
    "NoiseParams",
    "KrausSet",
    "ROTATION_GENERATOR",
    "noise_rotation",
    "sample_noisy_single_qubit",
    "sample_noisy_cphase",
    "hadamard_noise_kraus",
    "cphase_noise_kraus",
    "orthogonalized_cphase_kraus",
    "f_orthogonality_residual",
    "kraus_channel_apply",
    "kraus_superoperator",
    "unitary_superoperator",
    "choi_state",
    "mc_channel_estimate",
    "mc_channel_estimate_batch",
    "rotation_moments",
    "phase_coherence_factor",
]

# the [[0, 1], [-1, 0]] operator generating the over-rotation
ROTATION_GENERATOR = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class NoiseParams:
    e: float
    theta: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.e) or self.e < 0:
            raise ValueError(f"error rate e must be finite and >= 0, got {self.e}")


@dataclass(frozen=True)
class KrausSet:
    """Ordered Kraus operators on ``arity`` qubits; index 0 is the dominant one."""

    ops: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(op, dtype=complex) for op in self.ops)
        if not ops:
            raise ValueError("a Kraus set needs at least one operator")
        shape = ops[0].shape
        if any(op.shape != shape for op in ops):
            raise ValueError("Kraus operators must share one shape")
        num_qubits(shape[0])
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    @property
    def arity(self) -> int:
        return num_qubits(self.dim)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __getitem__(self, i):
        return self.ops[i]

    def completeness_residual(self) -> float:
        """max |sum_i E_i^dag E_i - I|."""
        total = sum(op.conj().T @ op for op in self.ops)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def weights(self) -> np.ndarray:
        """tr(E_i^dag E_i) / d for each operator."""
        return np.array([np.vdot(op, op).real / self.dim for op in self.ops])


def noise_rotation(angle) -> np.ndarray:
    """Real rotation [[cos a, sin a], [-sin a, cos a]]; vectorized over ``angle``."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty(angle.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def sample_noisy_single_qubit(ideal: np.ndarray, params: NoiseParams, rng) -> np.ndarray:
    """Draw xi ~ N(0, 1) and return ``ideal @ R(e * xi)``."""
    ideal = np.asarray(ideal, dtype=complex)
    if ideal.shape != (2, 2) or not is_unitary(ideal):
        raise ValueError("ideal gate must be a 2x2 unitary")
    xi = rng.standard_normal()
    return ideal @ noise_rotation(params.e * xi)


def sample_noisy_cphase(params: NoiseParams, rng) -> np.ndarray:
    """Draw xi ~ N(0, 1) and return diag(1, 1, 1, exp(-i(theta + e xi)))."""
    xi = rng.standard_normal()
    return cphase_matrix(params.theta + params.e * xi)


def _lambdas(e: float) -> tuple[float, float]:
    x = np.exp(-2.0 * e * e)
    return 0.5 * (1.0 + x), 0.5 * (1.0 - x)


def hadamard_noise_kraus(e: float) -> KrausSet:
    """Kraus pair equivalent to the Gaussian over-rotation R(e*xi)."""
    NoiseParams(e)
    lam1, lam2 = _lambdas(e)
    return KrausSet((np.sqrt(lam1) * np.eye(2), np.sqrt(lam2) * ROTATION_GENERATOR))


def cphase_noise_kraus(e: float) -> KrausSet:
    """Kraus pair for the phase noise on |11>, with P = exp(-e^2)."""
    NoiseParams(e)
    p = np.exp(-e * e)
    e1 = np.diag([1.0, 1.0, 1.0, np.sqrt(p)])
    e2 = np.diag([0.0, 0.0, 0.0, np.sqrt(-np.expm1(-e * e))])
    return KrausSet((e1, e2))


def _f_parameter(e: float) -> float:
    if e == 0:
        return 0.0
    p = np.exp(-e * e)
    # 1 - P via expm1 so tiny e keeps full precision
    q = -np.expm1(-e * e)
    # sqrt(1+3P) - (1+P) == (1+3P - (1+P)^2) / (sqrt(1+3P) + 1+P) == P q / (...)
    num = p * q / (np.sqrt(1.0 + 3.0 * p) + 1.0 + p)
    return float(num / np.sqrt(p * q))


def orthogonalized_cphase_kraus(e: float) -> tuple[KrausSet, float]:
    """Unitary remix of the phase-noise pair with orthogonal diagonals.

    Returns ``(kraus_set, f)``.  At ``e == 0`` this is the plain pair with f = 0.
    """
    NoiseParams(e)
    if e == 0:
        return cphase_noise_kraus(0.0), 0.0
    p = np.exp(-e * e)
    sp, sq = np.sqrt(p), np.sqrt(-np.expm1(-e * e))
    f = _f_parameter(e)
    norm = 1.0 / np.sqrt(1.0 + f * f)
    e1 = norm * np.diag([1.0, 1.0, 1.0, sp + f * sq])
    e2 = norm * np.diag([-f, -f, -f, -f * sp + sq])
    return KrausSet((e1, e2)), f


def f_orthogonality_residual(e: float, f: float) -> float:
    """Residual of sqrt(P(1-P)) f^2 + 2(1+P) f - sqrt(P(1-P)) at the given f."""
    p = np.exp(-e * e)
    s = np.sqrt(p * -np.expm1(-e * e))
    return float(s * f * f + 2.0 * (1.0 + p) * f - s)


def kraus_channel_apply(rho: np.ndarray, kraus: KrausSet, targets) -> np.ndarray:
    """sum_i E_i rho E_i^dag with each E_i embedded on ``targets``."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    for op in kraus:
        left = apply_gate(rho.T, op, targets).T
        out += apply_gate(left.conj(), op, targets).conj()
    return out


def kraus_superoperator(kraus: KrausSet) -> np.ndarray:
    return sum(np.kron(op.conj(), op) for op in kraus)


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return np.kron(u.conj(), u)


def choi_state(kraus: KrausSet) -> np.ndarray:
    """Unit-trace Choi matrix, reference system first.

    Equivalent to (1/d) sum_i |E_i>><<E_i| with the row-major vectorization
    |E>> = sum_ij E_ji |i>|j>.
    """
    d = kraus.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for op in kraus:
        v = op.T.reshape(-1)
        out += np.outer(v, v.conj())
    return out / d


def mc_channel_estimate(sampler: Callable, trials: int, seed) -> np.ndarray:
    """Empirical superoperator mean of rho -> V rho V^dag over sampled V.

    ``sampler(rng)`` returns one unitary.  Draws come from a single stream
    seeded by ``seed``, so the estimate is reproducible.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    acc = None
    for _ in range(trials):
        s = unitary_superoperator(sampler(rng))
        acc = s if acc is None else acc + s
    return acc / trials


def mc_channel_estimate_batch(sample_many: Callable, trials: int, seed, chunk: int = 10000) -> np.ndarray:
    """Vectorized ``mc_channel_estimate``: ``sample_many(rng, size)`` returns a
    (size, d, d) stack of unitaries drawn in stream order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    acc = None
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        u = np.asarray(sample_many(rng, m), dtype=complex)
        d = u.shape[-1]
        s = np.einsum("bij,bkl->ikjl", u.conj(), u).reshape(d * d, d * d)
        acc = s if acc is None else acc + s
        done += m
    return acc / trials


def rotation_moments(e: float) -> dict:
    """Closed-form Gaussian moments of the over-rotation angle e*xi.

    E[cos^2] = (1 + exp(-2e^2))/2, E[sin^2] = (1 - exp(-2e^2))/2, and the odd
    mixed moment E[cos sin] vanishes.
    """
    x = np.exp(-2.0 * e * e)
    return {"cos2": 0.5 * (1.0 + x), "sin2": 0.5 * (1.0 - x), "cossin": 0.0}


def phase_coherence_factor(e: float) -> float:
    """E[exp(-i e xi)] = exp(-e^2 / 2) for xi ~ N(0, 1)."""
    return float(np.exp(-0.5 * e * e))

