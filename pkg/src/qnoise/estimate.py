"""Closed-form accuracy estimates for noisy Grover search and QFT.

All QFT estimates are evaluated in log space, so n in the tens of thousands
does not underflow.  The exponent n(n-1)/8 is used as a real number even when
it is not an integer.
"""

from __future__ import annotations

import math

import numpy as np

from .circuits import ideal_grover_success
from .noise import _f_parameter

__all__ = [
    "lambda1",
    "lambda2",
    "phase_keep_probability",
    "f_parameter",
    "refined_phase_factor",
    "refined_phase_factor_single_power",
    "uniform_branch_factor",
    "grover_fidelity_bound",
    "qft_fidelity_naive",
    "qft_fidelity_refined",
    "qft_fidelity_refined_single_power",
    "qft_accuracy_table",
]


def _check_e(e):
    if not math.isfinite(e) or e < 0:
        raise ValueError(f"error rate e must be finite and >= 0, got {e}")


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n}")


def lambda1(e: float) -> float:
    """Weight of the identity branch of the single-qubit over-rotation noise."""
    _check_e(e)
    return 0.5 * (1.0 + math.exp(-2.0 * e * e))


def lambda2(e: float) -> float:
    _check_e(e)
    return -0.5 * math.expm1(-2.0 * e * e)


def _log_lambda1(e):
    # log((1 + exp(-2e^2)) / 2) without losing digits for tiny e
    return math.log1p(0.5 * math.expm1(-2.0 * e * e))


def phase_keep_probability(e: float) -> float:
    """P = exp(-e^2)."""
    _check_e(e)
    return math.exp(-e * e)


def f_parameter(e: float) -> float:
    _check_e(e)
    return _f_parameter(e)


def _refined_parts(e):
    p = math.exp(-e * e)
    q = -math.expm1(-e * e)
    f = _f_parameter(e)
    a = math.sqrt(p) + f * math.sqrt(q)
    return a, f


def refined_phase_factor(e: float) -> float:
    """(sqrt(P) + f sqrt(1-P))^2 / (1 + f^2)^4."""
    _check_e(e)
    a, f = _refined_parts(e)
    return a * a / (1.0 + f * f) ** 4


def refined_phase_factor_single_power(e: float) -> float:
    """Comparison variant with (1 + f^2) to the first power.  Not the published
    estimate; reported only for side-by-side output."""
    _check_e(e)
    a, f = _refined_parts(e)
    return a * a / (1.0 + f * f)


def uniform_branch_factor(e: float) -> float:
    """Squared norm kept when the dominant orthogonalized phase-noise operator
    acts on a uniform two-qubit state: (3 + a^2) / (4 (1 + f^2))."""
    _check_e(e)
    a, f = _refined_parts(e)
    return (3.0 + a * a) / (4.0 * (1.0 + f * f))


def grover_fidelity_bound(n: int, j: int, e: float) -> float:
    """lambda1^(n + 2 n j) * p_ideal(n, j); a lower bound on the success probability."""
    _check_n(n)
    _check_e(e)
    if j < 0:
        raise ValueError("j must be >= 0")
    return math.exp((n + 2 * n * j) * _log_lambda1(e)) * ideal_grover_success(n, j)


def _qft_log(n, e, log_phase):
    return n * _log_lambda1(e) + n * (n - 1) / 8.0 * log_phase


def qft_fidelity_naive(n: int, e: float) -> float:
    """P_H^n * P_R^(n(n-1)/8) with P_H = lambda1 and P_R = exp(-e^2)."""
    _check_n(n)
    _check_e(e)
    return math.exp(_qft_log(n, e, -e * e))


def qft_fidelity_refined(n: int, e: float) -> float:
    """P_H^n * P~_R^(n(n-1)/8) using the orthogonalized phase-noise factor."""
    _check_n(n)
    _check_e(e)
    return math.exp(_qft_log(n, e, math.log(refined_phase_factor(e))))


def qft_fidelity_refined_single_power(n: int, e: float) -> float:
    _check_n(n)
    _check_e(e)
    return math.exp(_qft_log(n, e, math.log(refined_phase_factor_single_power(e))))


def qft_accuracy_table(n_list, e_list) -> np.ndarray:
    """Refined QFT fidelity for every (n, e); rows follow ``n_list``."""
    n_list = list(n_list)
    e_list = list(e_list)
    if not n_list or not e_list:
        raise ValueError("n_list and e_list must be non-empty")
    return np.array([[qft_fidelity_refined(n, e) for e in e_list] for n in n_list])
