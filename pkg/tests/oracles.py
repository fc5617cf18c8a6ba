"""Reference computations that avoid the low-rank engine and the trajectory code."""

import numpy as np

from qnoise.circuits import step_gate
from qnoise.mc import noise_kraus_for_step
from qnoise.noise import kraus_channel_apply
from qnoise.qcore import apply_gate_density, density_from_state


def step_diagonal(step, dim):
    d = np.ones(dim, dtype=complex)
    if step.kind == "oracle_phase_flip":
        d[step.marked] = -1
    elif step.kind == "zero_phase_flip":
        d[0] = -1
    return d


def exact_density_run(circuit, e, kraus_choice, psi0, record=None):
    """Full density-matrix evolution: noise channel then ideal gate, every step.

    ``record(pos, rho)`` is called after every step when given.
    """
    rho = density_from_state(psi0)
    for pos, step in enumerate(circuit.steps):
        if step.noisy:
            rho = kraus_channel_apply(rho, noise_kraus_for_step(step, e, kraus_choice), step.targets)
        if step.kind in ("hadamard", "cphase"):
            rho = apply_gate_density(rho, step_gate(step), step.targets)
        else:
            d = step_diagonal(step, rho.shape[0])
            rho = d[:, None] * rho * d.conj()[None, :]
        if record is not None:
            record(pos, rho)
    return rho
