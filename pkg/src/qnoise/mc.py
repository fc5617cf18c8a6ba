"""Monte Carlo trajectories and low-rank experiment runners.

Reproducibility contract: trajectory ``i`` draws all its randomness from its
own generator, seeded by ``SeedSequence(seed, spawn_key=(i,))``.  Trajectories
are simulated in fixed-size chunks (``CHUNK``), and the per-trajectory
observables are concatenated in index order before any reduction, so results
are bit-identical for any number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circuits import (
    Circuit,
    GroverSpec,
    QftSpec,
    apply_step_ideal,
    build_grover,
    build_qft,
    ideal_qft_reference,
)
from .lowrank import (
    apply_branch,
    apply_channel_truncate,
    init_pure,
    surviving_trace,
)
from .noise import (
    cphase_noise_kraus,
    hadamard_noise_kraus,
    noise_rotation,
    orthogonalized_cphase_kraus,
)
from .qcore import HADAMARD, apply_gate_batch, haar_random_states

__all__ = [
    "CHUNK",
    "TrajectoryStats",
    "ExperimentRecord",
    "trajectory_rng",
    "summarize",
    "simulate_trajectories",
    "sample_final_states",
    "run_grover_mc",
    "run_grover_mc_sweep",
    "run_qft_mc",
    "noise_kraus_for_step",
    "run_lowrank_experiment",
    "maximally_entangled_state",
]

CHUNK = 256


@dataclass(frozen=True)
class TrajectoryStats:
    mean: float
    stderr: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ExperimentRecord:
    step: int
    fidelity: float
    trace: float


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def summarize(samples: np.ndarray, seed: int) -> TrajectoryStats:
    samples = np.asarray(samples, dtype=float)
    m = samples.size
    mean = float(np.mean(samples))
    if m > 1 and np.ptp(samples) > 0:
        stderr = float(np.std(samples, ddof=1) / math.sqrt(m))
    else:
        stderr = 0.0
    return TrajectoryStats(mean, stderr, m, seed)


def _noisy_pass(circuit: Circuit, states: np.ndarray, xis: np.ndarray, e: float, on_iteration=None):
    """Push a batch of states (B, 2**n) through one sampled noisy realization per row.

    ``xis`` has shape (B, circuit.num_noisy).  ``on_iteration(j, states)`` is
    called whenever a Grover iteration completes.
    """
    k = 0
    steps = circuit.steps
    for pos, step in enumerate(steps):
        if step.noisy and step.kind == "hadamard":
            gates = HADAMARD @ noise_rotation(e * xis[:, k])
            states = apply_gate_batch(states, gates, step.targets[0])
            k += 1
        elif step.noisy and step.kind == "cphase":
            a, b = step.targets
            idx = np.arange(states.shape[1])
            mask = (((idx >> a) & 1) & ((idx >> b) & 1)).astype(bool)
            phase = np.exp(-1j * (step.theta + e * xis[:, k]))
            states = states.copy()
            states[:, mask] *= phase[:, None]
            k += 1
        else:
            states = apply_step_ideal(states, step)
        if on_iteration is not None and step.iteration >= 0:
            last = pos + 1 == len(steps) or steps[pos + 1].iteration != step.iteration
            if last:
                on_iteration(step.iteration, states)
    return states


def sample_final_states(circuit: Circuit, e: float, input_state: np.ndarray, trials: int, seed: int) -> np.ndarray:
    """Final pure state of each of ``trials`` noisy trajectories, one per row."""
    xis = np.stack([trajectory_rng(seed, i).standard_normal(circuit.num_noisy) for i in range(trials)])
    states = np.repeat(np.asarray(input_state, dtype=complex)[None, :], trials, axis=0)
    return _noisy_pass(circuit, states, xis, e)


def _grover_chunk(args):
    spec, e, seed, start, stop = args
    circuit = build_grover(spec)
    dim = 2**spec.n
    xis = np.stack([trajectory_rng(seed, i).standard_normal(circuit.num_noisy) for i in range(start, stop)])
    states = np.zeros((stop - start, dim), dtype=complex)
    states[:, 0] = 1.0
    out = np.empty((stop - start, spec.iterations + 1))

    def record(j, psi):
        out[:, j] = np.abs(psi[:, spec.marked]) ** 2

    _noisy_pass(circuit, states, xis, e, record)
    return out


def _qft_chunk(args):
    n, e, inputs_per_trial, seed, start, stop = args
    circuit = build_qft(QftSpec(n))
    rows = []
    for i in range(start, stop):
        rng = trajectory_rng(seed, i)
        xi = rng.standard_normal(circuit.num_noisy)
        psi = haar_random_states(n, inputs_per_trial, rng)
        rows.append((xi, psi))
    xis = np.repeat(np.stack([r[0] for r in rows]), inputs_per_trial, axis=0)
    psi = np.concatenate([r[1] for r in rows], axis=0)
    noisy = _noisy_pass(circuit, psi, xis, e)
    ideal = ideal_qft_reference(psi)
    return np.abs(np.sum(ideal.conj() * noisy, axis=1)) ** 2


def _chunks(trials):
    return [(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]


def simulate_trajectories(worker, payloads, workers: int = 1) -> np.ndarray:
    """Run ``worker`` over ``payloads`` and concatenate the results in order."""
    if workers <= 1 or len(payloads) == 1:
        parts = [worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(worker, payloads))
    return np.concatenate(parts, axis=0)


def run_grover_mc_sweep(spec: GroverSpec, e: float, trials: int, seed: int, workers: int = 1) -> list:
    """Success probability after every iteration j = 0..spec.iterations.

    Every trajectory contributes to every j, so the entries are correlated.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    payloads = [(spec, e, seed, a, b) for a, b in _chunks(trials)]
    samples = simulate_trajectories(_grover_chunk, payloads, workers)
    return [summarize(samples[:, j], seed) for j in range(spec.iterations + 1)]


def run_grover_mc(spec: GroverSpec, e: float, trials: int, seed: int, workers: int = 1) -> TrajectoryStats:
    return run_grover_mc_sweep(spec, e, trials, seed, workers)[-1]


def run_qft_mc(
    spec: QftSpec,
    e: float,
    trials: int,
    inputs_per_trial: int = 1,
    seed: int = 0,
    workers: int = 1,
) -> TrajectoryStats:
    """Mean of |<QFT psi | noisy QFT psi>|^2 over noise draws and Haar inputs."""
    if trials < 1 or inputs_per_trial < 1:
        raise ValueError("trials and inputs_per_trial must be >= 1")
    payloads = [(spec.n, e, inputs_per_trial, seed, a, b) for a, b in _chunks(trials)]
    samples = simulate_trajectories(_qft_chunk, payloads, workers)
    return summarize(samples, seed)


def noise_kraus_for_step(step, e: float, kraus_choice: str = "eq7"):
    if step.kind == "hadamard":
        return hadamard_noise_kraus(e)
    if step.kind == "cphase":
        if kraus_choice == "eq4":
            return cphase_noise_kraus(e)
        if kraus_choice == "eq7":
            return orthogonalized_cphase_kraus(e)[0]
        raise ValueError(f"kraus_choice must be 'eq4' or 'eq7', got {kraus_choice!r}")
    raise ValueError(f"{step.kind} steps carry no noise")


def maximally_entangled_state(n: int) -> np.ndarray:
    """(1/sqrt(2**n)) sum_i |i>_sys |i>_ref on 2n qubits; system = low n bits."""
    d = 2**n
    psi = np.zeros(d * d, dtype=complex)
    i = np.arange(d)
    psi[i * d + i] = 1.0 / math.sqrt(d)
    return psi


def run_lowrank_experiment(
    circuit: Circuit,
    e: float,
    kraus_choice: str = "eq7",
    mode: str = "eigen",
    rank: int = 1,
    input_state: Optional[np.ndarray] = None,
    per_gate: bool = False,
) -> list:
    """Run the fixed-rank engine over ``circuit`` and record fidelity and trace.

    Records after every Grover iteration (including iteration 0, the state
    preparation), or once at the end for circuits without iteration tags.
    ``per_gate`` records after every step instead.  The input may live on more
    qubits than the circuit (for instance the maximally entangled state for
    Choi-space runs); the circuit then acts on the low ``circuit.n`` qubits.
    Fidelity is <ideal|rho|ideal> with the truncated, sub-normalized rho.
    """
    if mode not in ("eigen", "branch"):
        raise ValueError(f"mode must be 'eigen' or 'branch', got {mode!r}")
    if input_state is None:
        input_state = np.zeros(2**circuit.n, dtype=complex)
        input_state[0] = 1.0
    n_sys = circuit.n if input_state.shape[-1] != 2**circuit.n else None
    factor = init_pure(input_state, rank)
    ideal = np.asarray(input_state, dtype=complex)
    cache = {}
    records = []
    steps = circuit.steps
    for pos, step in enumerate(steps):
        if step.noisy:
            key = (step.kind, kraus_choice)
            if key not in cache:
                cache[key] = noise_kraus_for_step(step, e, kraus_choice)
            kraus = cache[key]
            if mode == "eigen":
                factor = apply_channel_truncate(factor, kraus, step.targets)
            else:
                factor = apply_branch(factor, kraus, step.targets, 0)
        factor = type(factor)(apply_step_ideal(factor.vecs, step, n_sys), factor.rank)
        ideal = apply_step_ideal(ideal, step, n_sys)

        if per_gate:
            due = True
        elif step.iteration >= 0:
            due = pos + 1 == len(steps) or steps[pos + 1].iteration != step.iteration
        else:
            due = pos + 1 == len(steps)
        if due:
            label = pos if per_gate or step.iteration < 0 else step.iteration
            records.append(ExperimentRecord(label, factor.fidelity(ideal), surviving_trace(factor)))
    return records
