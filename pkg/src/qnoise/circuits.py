"""Grover and QFT circuits with per-gate noise flags, plus ideal references.

Only Hadamard and controlled-phase steps can be noisy.  The Grover oracle and
the zero-state reflection are exact diagonal sign flips.

The controlled-phase matrix is diag(1, 1, 1, exp(-i theta)); the QFT uses
theta = -pi / 2**k so that each rotation contributes exp(+i pi / 2**k) and the
circuit (no final swaps) equals the bit-reversed discrete Fourier transform
with kernel exp(+2 pi i k x / 2**n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qcore import HADAMARD, apply_gate, cphase_matrix, num_qubits

__all__ = [
    "Step",
    "Circuit",
    "GroverSpec",
    "QftSpec",
    "build_grover",
    "build_qft",
    "optimal_grover_iterations",
    "ideal_grover_success",
    "ideal_qft_reference",
    "bit_reverse_permutation",
    "step_gate",
    "apply_step_ideal",
    "run_ideal",
]

KINDS = ("hadamard", "cphase", "oracle_phase_flip", "zero_phase_flip")


@dataclass(frozen=True)
class Step:
    kind: str
    targets: tuple = ()
    noisy: bool = False
    theta: float = 0.0
    marked: Optional[int] = None
    # index of the Grover iteration (0 = state preparation); -1 when unused
    iteration: int = -1


@dataclass(frozen=True)
class Circuit:
    n: int
    steps: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for s in self.steps:
            if s.kind not in KINDS:
                raise ValueError(f"unknown gate kind {s.kind!r}")
            if any(not 0 <= t < self.n for t in s.targets):
                raise ValueError(f"target out of range in {s}")
            if s.kind == "hadamard" and len(s.targets) != 1:
                raise ValueError("hadamard takes exactly one target")
            if s.kind == "cphase" and len(s.targets) != 2:
                raise ValueError("cphase takes exactly two targets")
            if s.noisy and s.kind not in ("hadamard", "cphase"):
                raise ValueError(f"{s.kind} steps are always noiseless")

    def __len__(self):
        return len(self.steps)

    def count(self, kind: str, noisy: Optional[bool] = None) -> int:
        return sum(
            1 for s in self.steps if s.kind == kind and (noisy is None or s.noisy == noisy)
        )

    @property
    def num_noisy(self) -> int:
        return sum(1 for s in self.steps if s.noisy)


@dataclass(frozen=True)
class GroverSpec:
    n: int
    marked: int
    iterations: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.marked < 2**self.n:
            raise ValueError(f"marked state {self.marked} out of range for n={self.n}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


@dataclass(frozen=True)
class QftSpec:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")


def _hadamard_layer(n, iteration):
    return [Step("hadamard", (q,), True, iteration=iteration) for q in range(n)]


def build_grover(spec: GroverSpec) -> Circuit:
    n = spec.n
    steps = _hadamard_layer(n, 0)
    for j in range(1, spec.iterations + 1):
        steps.append(Step("oracle_phase_flip", (), False, marked=spec.marked, iteration=j))
        steps += _hadamard_layer(n, j)
        steps.append(Step("zero_phase_flip", (), False, iteration=j))
        steps += _hadamard_layer(n, j)
    return Circuit(n, tuple(steps))


def build_qft(spec: QftSpec) -> Circuit:
    n = spec.n
    steps = []
    for q in range(n - 1, -1, -1):
        steps.append(Step("hadamard", (q,), True))
        for k, lower in enumerate(range(q - 1, -1, -1), start=1):
            steps.append(Step("cphase", (q, lower), True, theta=-math.pi / 2**k))
    return Circuit(n, tuple(steps))


def optimal_grover_iterations(n: int) -> int:
    return max(0, round(math.pi / (4.0 * math.asin(2.0 ** (-n / 2))) - 0.5))


def ideal_grover_success(n: int, j: int) -> float:
    if n < 1 or j < 0:
        raise ValueError("need n >= 1 and j >= 0")
    return math.sin((2 * j + 1) * math.asin(2.0 ** (-n / 2))) ** 2


def bit_reverse_permutation(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return rev


def ideal_qft_reference(state: np.ndarray) -> np.ndarray:
    """Exact DFT (kernel exp(+2 pi i k x / N), unitary scaling) in the circuit's
    bit-reversed output order."""
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state.shape[-1])
    y = np.fft.ifft(state, axis=-1, norm="ortho")
    out = np.empty_like(y)
    out[..., bit_reverse_permutation(n)] = y
    return out


def step_gate(step: Step) -> np.ndarray:
    """Ideal local matrix for a Hadamard or controlled-phase step."""
    if step.kind == "hadamard":
        return HADAMARD
    if step.kind == "cphase":
        return cphase_matrix(step.theta)
    raise ValueError(f"{step.kind} has no local gate matrix")


def _system_index(dim: int, n_sys: Optional[int]) -> np.ndarray:
    idx = np.arange(dim)
    if n_sys is not None:
        idx &= (1 << n_sys) - 1
    return idx


def apply_step_ideal(vecs: np.ndarray, step: Step, n_sys: Optional[int] = None) -> np.ndarray:
    """Ideal action of one step on the last axis of ``vecs``.

    With ``n_sys`` set, the register may be larger than the circuit (e.g. an
    untouched reference half for Choi states); the phase flips then look only
    at the low ``n_sys`` bits.
    """
    if step.kind == "hadamard":
        return apply_gate(vecs, step_gate(step), step.targets)
    dim = np.shape(vecs)[-1]
    idx = _system_index(dim, n_sys)
    if step.kind == "oracle_phase_flip":
        mask = idx == step.marked
        phase = -1.0
    elif step.kind == "zero_phase_flip":
        mask = idx == 0
        phase = -1.0
    else:
        a, b = step.targets
        mask = (((idx >> a) & 1) & ((idx >> b) & 1)).astype(bool)
        phase = np.exp(-1j * step.theta)
    out = np.array(vecs, dtype=complex, copy=True)
    out[..., mask] *= phase
    return out


def run_ideal(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    psi = np.asarray(state, dtype=complex)
    n_sys = circuit.n if psi.shape[-1] != 2**circuit.n else None
    for step in circuit.steps:
        psi = apply_step_ideal(psi, step, n_sys)
    return psi
