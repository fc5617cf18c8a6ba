import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnoise.circuits import (
    Circuit,
    GroverSpec,
    QftSpec,
    Step,
    build_grover,
    build_qft,
    ideal_grover_success,
    ideal_qft_reference,
    optimal_grover_iterations,
    run_ideal,
)
from qnoise.qcore import basis_state, haar_random_states, overlap_fidelity, zero_state


def dft_matrix_bit_reversed(n):
    """Literal O(N^2) DFT with kernel exp(+2 pi i k x / N), rows bit-reversed."""
    N = 2**n
    k = np.arange(N)
    F = np.exp(2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)
    rev = [int(format(i, f"0{n}b")[::-1], 2) for i in range(N)]
    out = np.empty_like(F)
    out[rev] = F
    return out


def test_grover_counts_small():
    c = build_grover(GroverSpec(2, 3, 1))
    assert c.count("hadamard", noisy=True) == 6
    assert c.count("oracle_phase_flip") == 1
    assert c.count("zero_phase_flip") == 1
    assert build_grover(GroverSpec(12, 0, 3)).count("hadamard", noisy=True) == 84


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 20), j=st.integers(0, 50))
def test_grover_count_identity(n, j):
    c = build_grover(GroverSpec(n, 0, j))
    assert c.count("hadamard", noisy=True) == n + 2 * n * j
    assert c.num_noisy == n + 2 * n * j


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 20))
def test_qft_count_identity(n):
    c = build_qft(QftSpec(n))
    assert c.count("hadamard") == n
    assert c.count("cphase") == n * (n - 1) // 2
    assert all(s.noisy for s in c.steps)


def test_qft_small_cases():
    c = build_qft(QftSpec(1))
    assert len(c) == 1 and c.steps[0].kind == "hadamard"
    c = build_qft(QftSpec(5))
    assert c.count("hadamard") == 5 and c.count("cphase") == 10


def test_grover_two_qubits_exact():
    psi = run_ideal(build_grover(GroverSpec(2, 3, 1)), zero_state(2))
    assert abs(psi[3]) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_qft_of_zero_is_uniform():
    for n in (1, 3, 6):
        out = run_ideal(build_qft(QftSpec(n)), zero_state(n))
        assert np.allclose(out, 2 ** (-n / 2), atol=1e-14)
        assert np.allclose(ideal_qft_reference(zero_state(n)), 2 ** (-n / 2), atol=1e-15)


def test_ideal_grover_success_values():
    assert ideal_grover_success(2, 1) == pytest.approx(1.0, abs=1e-15)
    for n in (1, 3, 7):
        assert ideal_grover_success(n, 0) == pytest.approx(2.0**-n, rel=1e-13)
    j = round(math.pi / (4 * math.asin(2**-6)) - 0.5)
    assert j == optimal_grover_iterations(12) == 50
    assert ideal_grover_success(12, j) > 0.999


@pytest.mark.parametrize("n", range(1, 11))
def test_grover_ideal_simulation_matches_closed_form(n):
    jmax = 2 * max(1, optimal_grover_iterations(n))
    marked = (2**n - 1) // 3
    c = build_grover(GroverSpec(n, marked, jmax))
    psi = zero_state(n)
    j = -1
    for pos, step in enumerate(c.steps):
        psi = run_ideal(Circuit(n, (step,)), psi)
        last = pos + 1 == len(c.steps) or c.steps[pos + 1].iteration != step.iteration
        if last:
            j = step.iteration
            assert abs(abs(psi[marked]) ** 2 - ideal_grover_success(n, j)) < 1e-10
    assert j == jmax


def test_grover_twelve_qubits_cross_check():
    n, j = 12, optimal_grover_iterations(12)
    psi = run_ideal(build_grover(GroverSpec(n, 1234, j)), zero_state(n))
    assert abs(psi[1234]) ** 2 == pytest.approx(ideal_grover_success(n, j), abs=1e-10)


@pytest.mark.parametrize("n", range(1, 7))
def test_qft_operator_matches_reference(n):
    F = dft_matrix_bit_reversed(n)
    c = build_qft(QftSpec(n))
    for x in range(2**n):
        col = run_ideal(c, basis_state(n, x))
        assert np.max(np.abs(col - F[:, x])) < 1e-10
        assert np.max(np.abs(ideal_qft_reference(basis_state(n, x)) - F[:, x])) < 1e-12


def test_qft_haar_self_consistency():
    rng = np.random.default_rng(0)
    for n in range(1, 7):
        c = build_qft(QftSpec(n))
        for psi in haar_random_states(n, 200 // 6 + 1, rng):
            assert overlap_fidelity(run_ideal(c, psi), ideal_qft_reference(psi)) == pytest.approx(1.0, abs=1e-10)


def test_ideal_circuits_unitary():
    rng = np.random.default_rng(4)
    for n in (3, 5):
        for c in (build_qft(QftSpec(n)), build_grover(GroverSpec(n, 1, 3))):
            psi = haar_random_states(n, 1, rng)[0]
            assert abs(np.linalg.norm(run_ideal(c, psi)) - 1) < 1e-10


def test_spec_validation():
    with pytest.raises(ValueError):
        GroverSpec(3, 8, 1)
    with pytest.raises(ValueError):
        GroverSpec(3, 1, -1)
    with pytest.raises(ValueError):
        QftSpec(0)
    with pytest.raises(ValueError):
        Circuit(2, (Step("cphase", (0,), True),))
    with pytest.raises(ValueError):
        Circuit(2, (Step("oracle_phase_flip", (), True, marked=1),))
    with pytest.raises(ValueError):
        Circuit(2, (Step("hadamard", (2,), True),))
