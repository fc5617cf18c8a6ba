"""Command-line experiment driver.

Subcommands: estimate, fig1, fig2, fig3, channel-check, grover-sim, qft-sim.
Every command writes CSV (to ``--out`` or stdout).  Files are written to a
temporary sibling and renamed on success, so an aborted run leaves nothing.

Precedence: command-line flags > ``--config`` file > built-in defaults.  The
effective configuration is echoed to stderr.

Exit codes: 0 success, 1 invalid arguments, 2 check threshold breached,
3 resource guard refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from . import estimate as est
from .circuits import GroverSpec, QftSpec, build_grover, build_qft, optimal_grover_iterations
from .mc import (
    maximally_entangled_state,
    run_grover_mc_sweep,
    run_lowrank_experiment,
    run_qft_mc,
)
from .noise import (
    choi_state,
    cphase_noise_kraus,
    f_orthogonality_residual,
    hadamard_noise_kraus,
    kraus_superoperator,
    mc_channel_estimate_batch,
    noise_rotation,
    orthogonalized_cphase_kraus,
    phase_coherence_factor,
    rotation_moments,
)
from .qcore import haar_random_state

EXIT_OK, EXIT_ARGS, EXIT_CHECK, EXIT_RESOURCE = 0, 1, 2, 3

# memory budget for the low-rank engine (candidate columns included)
MEMORY_LIMIT_BYTES = 2 * 1024**3
MAX_N_HIGH_RANK = 14

CHECK_THRESHOLDS = {
    "completeness": 1e-10,
    "choi_eq4_vs_eq7": 1e-12,
    "moments": 1e-14,
    "mc_superoperator": 5e-3,
    "f_orthogonality": 1e-12,
}


class UsageError(Exception):
    pass


class ResourceError(Exception):
    pass


@dataclass
class RunConfig:
    n: Optional[int] = None
    e: Optional[float] = None
    j: Optional[int] = None
    rank: Optional[int] = None
    trials: Optional[int] = None
    seed: int = 12345
    kraus: str = "eq7"
    mode: str = "eigen"
    out: Optional[str] = None
    workers: int = 1
    marked: Optional[int] = None
    rank_a: int = 1
    rank_b: int = 30
    n_min: int = 2
    n_max: int = 10
    e_list: Optional[str] = None
    n_list: Optional[str] = None
    space: str = "state"
    per_gate: bool = False
    grover: bool = False
    qft: bool = False
    inputs_per_trial: int = 1


COMMAND_DEFAULTS = {
    "estimate": dict(n=None, e=0.01, j=None),
    "fig1": dict(n=12, e=0.01),
    "fig2": dict(e=0.01, trials=2000, n_min=2, n_max=10),
    "fig3": dict(e_list="0.0001,0.001,0.01"),
    "channel-check": dict(e_list="0.001,0.01,0.1,1", trials=100000),
    "grover-sim": dict(n=8, e=0.01, rank=1, trials=0),
    "qft-sim": dict(n=6, e=0.01, rank=1, trials=0),
}

_INT_KEYS = {"n", "j", "rank", "trials", "seed", "workers", "marked", "rank_a", "rank_b",
             "n_min", "n_max", "inputs_per_trial"}
_FLOAT_KEYS = {"e"}
_BOOL_KEYS = {"per_gate", "grover", "qft"}


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.10g}"


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config {path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise UsageError(f"config {path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value)
    return values


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {value!r}") from None
    return value


def _float_list(text, name):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"invalid {name}: {text!r}") from None
    if not vals:
        raise UsageError(f"{name} must not be empty")
    return vals


def _int_list(text, name):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"invalid {name}: {text!r}") from None
    if not vals:
        raise UsageError(f"{name} must not be empty")
    return vals


def _check_e(e, name="e"):
    if e is None or not math.isfinite(e) or e < 0:
        raise UsageError(f"{name} must be a finite number >= 0, got {e}")


def _check_int(value, name, low):
    if value is None or value < low:
        raise UsageError(f"{name} must be an integer >= {low}, got {value}")


def _guard_memory(n, rank, kraus_count=2):
    if rank > 1 and n > MAX_N_HIGH_RANK:
        raise ResourceError(
            f"refusing rank-{rank} run at n={n}: more than {MAX_N_HIGH_RANK} qubits needs "
            f"too much memory for a rank > 1 factor"
        )
    need = (kraus_count + 1) * rank * 2**n * 16
    if need > MEMORY_LIMIT_BYTES:
        raise ResourceError(
            f"refusing run at n={n}, rank={rank}: needs about {need / 1024**3:.1f} GiB "
            f"(limit {MEMORY_LIMIT_BYTES / 1024**3:.0f} GiB)"
        )


def write_csv(path: Optional[str], header, rows, stdout=None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    text = buf.getvalue()
    if path is None:
        (stdout or sys.stdout).write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- commands ---------------------------------------------------------------


def cmd_estimate(cfg: RunConfig):
    _check_e(cfg.e)
    if not (cfg.grover or cfg.qft):
        raise UsageError("estimate needs --grover and/or --qft")
    _check_int(cfg.n, "n", 1)
    e = cfg.e
    rows = [
        ("lambda1", est.lambda1(e)),
        ("lambda2", est.lambda2(e)),
        ("f", est.f_parameter(e)),
        ("P", est.phase_keep_probability(e)),
        ("P_H", est.lambda1(e)),
        ("P_R", est.phase_keep_probability(e)),
        ("P_R_refined", est.refined_phase_factor(e)),
    ]
    if cfg.grover:
        j = optimal_grover_iterations(cfg.n) if cfg.j is None else cfg.j
        _check_int(j, "j", 0)
        rows.append(("grover_j", j))
        rows.append(("grover_ideal", est.ideal_grover_success(cfg.n, j)))
        rows.append(("grover_bound_eq5", est.grover_fidelity_bound(cfg.n, j, e)))
    if cfg.qft:
        rows.append(("qft_naive_eq6", est.qft_fidelity_naive(cfg.n, e)))
        rows.append(("qft_refined_eq8", est.qft_fidelity_refined(cfg.n, e)))
        rows.append(("qft_refined_single_power_alt", est.qft_fidelity_refined_single_power(cfg.n, e)))
    return ["quantity", "value"], rows


def _grover_defaults(cfg):
    n = cfg.n
    marked = 2**n - 1 if cfg.marked is None else cfg.marked
    if not 0 <= marked < 2**n:
        raise UsageError(f"marked must be in [0, {2**n}), got {marked}")
    j = optimal_grover_iterations(n) if cfg.j is None else cfg.j
    _check_int(j, "j", 0)
    return marked, j


def _space_input(cfg, n):
    if cfg.space == "state":
        return None
    if cfg.space == "choi":
        return maximally_entangled_state(n)
    raise UsageError(f"space must be 'state' or 'choi', got {cfg.space!r}")


def cmd_fig1(cfg: RunConfig):
    _check_int(cfg.n, "n", 1)
    _check_e(cfg.e)
    _check_int(cfg.rank_a, "rank_a", 1)
    _check_int(cfg.rank_b, "rank_b", 1)
    _check_mode_kraus(cfg)
    marked, j = _grover_defaults(cfg)
    width = cfg.n * (2 if cfg.space == "choi" else 1)
    _guard_memory(width, max(cfg.rank_a, cfg.rank_b))
    circuit = build_grover(GroverSpec(cfg.n, marked, j))
    inp = _space_input(cfg, cfg.n)
    runs = [
        run_lowrank_experiment(circuit, cfg.e, cfg.kraus, cfg.mode, r, inp, cfg.per_gate)
        for r in (cfg.rank_a, cfg.rank_b)
    ]
    name_a = f"fid_rank{cfg.rank_a}"
    name_b = f"fid_rank{cfg.rank_b}" if cfg.rank_b != cfg.rank_a else f"fid_rank{cfg.rank_b}_b"
    rows = [(a.step, a.fidelity, b.fidelity, abs(a.fidelity - b.fidelity)) for a, b in zip(*runs)]
    return ["step", name_a, name_b, "abs_gap"], rows


def cmd_fig2(cfg: RunConfig):
    _check_e(cfg.e)
    _check_int(cfg.trials, "trials", 1)
    _check_int(cfg.n_min, "n_min", 1)
    _check_int(cfg.n_max, "n_max", cfg.n_min)
    _check_int(cfg.workers, "workers", 1)
    if cfg.n_max > MAX_N_HIGH_RANK:
        raise ResourceError(f"refusing Monte Carlo QFT at n={cfg.n_max} > {MAX_N_HIGH_RANK}")
    rows = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        stats = run_qft_mc(QftSpec(n), cfg.e, cfg.trials, cfg.inputs_per_trial, cfg.seed + n, cfg.workers)
        rows.append((n, stats.mean, stats.stderr, est.qft_fidelity_naive(n, cfg.e),
                     est.qft_fidelity_refined(n, cfg.e)))
    return ["n", "mc_mean", "mc_stderr", "naive_eq6", "refined_eq8"], rows


def default_fig3_n_values():
    grid = np.unique(np.round(np.logspace(0, 4, 41)).astype(int))
    return sorted(set(grid.tolist()) | {2000})


def cmd_fig3(cfg: RunConfig):
    e_values = _float_list(cfg.e_list, "e_list")
    for e in e_values:
        _check_e(e, "e_list entry")
    n_values = default_fig3_n_values() if cfg.n_list is None else _int_list(cfg.n_list, "n_list")
    for n in n_values:
        _check_int(n, "n_list entry", 1)
    table = est.qft_accuracy_table(n_values, e_values)
    header = ["n"] + [f"refined_e{e:g}" for e in e_values]
    rows = [[n] + list(table[i]) for i, n in enumerate(n_values)]
    return header, rows


def _phase_noise_batch(e, rng, m):
    out = np.zeros((m, 4, 4), dtype=complex)
    out[:, 0, 0] = out[:, 1, 1] = out[:, 2, 2] = 1.0
    out[:, 3, 3] = np.exp(-1j * e * rng.standard_normal(m))
    return out


def channel_check_rows(e_values, trials, seed, hadamard_kraus=None, cphase_kraus=None, ortho_kraus=None):
    """Residuals of every channel identity at each e.

    The Kraus constructors can be swapped out (tests inject broken sets).
    Returns rows of (e, check, residual, threshold, ok).
    """
    hadamard_kraus = hadamard_kraus or hadamard_noise_kraus
    cphase_kraus = cphase_kraus or cphase_noise_kraus
    ortho_kraus = ortho_kraus or orthogonalized_cphase_kraus
    rows = []
    for e in e_values:
        kh = hadamard_kraus(e)
        k4 = cphase_kraus(e)
        k7, f = ortho_kraus(e)
        completeness = max(k.completeness_residual() for k in (kh, k4, k7))
        choi_gap = float(np.max(np.abs(choi_state(k4) - choi_state(k7))))

        # closed-form moments vs the Kraus weights
        mom = rotation_moments(e)
        s_kraus = kraus_superoperator(kh)
        # column-major vec: S[(0,0),(0,0)] = E cos^2, S[(0,0),(1,1)] = E sin^2
        lam1_from_kraus = s_kraus[0, 0].real
        lam2_from_kraus = s_kraus[0, 3].real
        cross = abs(s_kraus[0, 1]) + abs(s_kraus[0, 2])
        p_coh = phase_coherence_factor(e)
        s_phase = kraus_superoperator(k4)
        coh_from_kraus = s_phase[3, 3].real  # coherence of |11><00| scales by sqrt(P)
        moments = max(
            abs(mom["cos2"] - lam1_from_kraus),
            abs(mom["sin2"] - lam2_from_kraus),
            abs(mom["cossin"] - cross),
            abs(p_coh - coh_from_kraus),
        )

        rng_seed = np.random.SeedSequence(seed, spawn_key=(int(round(e * 1e9)),))
        s_mc = mc_channel_estimate_batch(
            lambda rng, m: noise_rotation(e * rng.standard_normal(m)), trials, rng_seed
        )
        s_mc_phase = mc_channel_estimate_batch(lambda rng, m: _phase_noise_batch(e, rng, m), trials, rng_seed)
        mc_gap = max(
            float(np.max(np.abs(s_mc - s_kraus))),
            float(np.max(np.abs(s_mc_phase - s_phase))),
        )
        diag_dot = abs(np.vdot(np.diag(k7[0]).conj(), np.diag(k7[1])))
        f_res = abs(f_orthogonality_residual(e, f)) if e > 0 else 0.0
        orth = max(diag_dot, f_res)

        for name, value in (
            ("completeness", completeness),
            ("choi_eq4_vs_eq7", choi_gap),
            ("moments", moments),
            ("mc_superoperator", mc_gap),
            ("f_orthogonality", orth),
        ):
            limit = CHECK_THRESHOLDS[name]
            rows.append((e, name, value, limit, "ok" if value <= limit else "FAIL"))
    return rows


def cmd_channel_check(cfg: RunConfig):
    e_values = _float_list(cfg.e_list if cfg.e is None else str(cfg.e), "e_list")
    for e in e_values:
        _check_e(e, "e_list entry")
    _check_int(cfg.trials, "trials", 1)
    rows = channel_check_rows(e_values, cfg.trials, cfg.seed)
    return ["e", "check", "residual", "threshold", "status"], rows


def _check_mode_kraus(cfg):
    if cfg.kraus not in ("eq4", "eq7"):
        raise UsageError(f"kraus must be 'eq4' or 'eq7', got {cfg.kraus!r}")
    if cfg.mode not in ("eigen", "branch"):
        raise UsageError(f"mode must be 'eigen' or 'branch', got {cfg.mode!r}")


def cmd_grover_sim(cfg: RunConfig):
    _check_int(cfg.n, "n", 1)
    _check_e(cfg.e)
    _check_int(cfg.rank, "rank", 1)
    _check_int(cfg.trials, "trials", 0)
    _check_int(cfg.workers, "workers", 1)
    _check_mode_kraus(cfg)
    marked, j = _grover_defaults(cfg)
    _guard_memory(cfg.n * (2 if cfg.space == "choi" else 1), cfg.rank)
    spec = GroverSpec(cfg.n, marked, j)
    records = run_lowrank_experiment(build_grover(spec), cfg.e, cfg.kraus, cfg.mode, cfg.rank,
                                     _space_input(cfg, cfg.n))
    header = ["step", "fidelity", "trace", "bound_eq5"]
    mc = run_grover_mc_sweep(spec, cfg.e, cfg.trials, cfg.seed, cfg.workers) if cfg.trials else None
    if mc:
        header += ["mc_success_mean", "mc_success_stderr"]
    rows = []
    for r in records:
        row = [r.step, r.fidelity, r.trace, est.grover_fidelity_bound(cfg.n, r.step, cfg.e)]
        if mc:
            row += [mc[r.step].mean, mc[r.step].stderr]
        rows.append(row)
    return header, rows


def cmd_qft_sim(cfg: RunConfig):
    _check_int(cfg.n, "n", 1)
    _check_e(cfg.e)
    _check_int(cfg.rank, "rank", 1)
    _check_int(cfg.trials, "trials", 0)
    _check_int(cfg.workers, "workers", 1)
    _check_mode_kraus(cfg)
    _guard_memory(cfg.n * (2 if cfg.space == "choi" else 1), cfg.rank)
    circuit = build_qft(QftSpec(cfg.n))
    inp = _space_input(cfg, cfg.n)
    if inp is None:
        inp = haar_random_state(cfg.n, cfg.seed)
    rec = run_lowrank_experiment(circuit, cfg.e, cfg.kraus, cfg.mode, cfg.rank, inp, cfg.per_gate)
    header = ["step", "fidelity", "trace", "naive_eq6", "refined_eq8"]
    naive, refined = est.qft_fidelity_naive(cfg.n, cfg.e), est.qft_fidelity_refined(cfg.n, cfg.e)
    rows = [[r.step, r.fidelity, r.trace, naive, refined] for r in rec]
    if cfg.trials:
        stats = run_qft_mc(QftSpec(cfg.n), cfg.e, cfg.trials, cfg.inputs_per_trial, cfg.seed, cfg.workers)
        header += ["mc_mean", "mc_stderr"]
        rows = [row + [stats.mean, stats.stderr] for row in rows]
    return header, rows


COMMANDS = {
    "estimate": cmd_estimate,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "channel-check": cmd_channel_check,
    "grover-sim": cmd_grover_sim,
    "qft-sim": cmd_qft_sim,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qnoise", description="Noisy Grover/QFT simulation and fidelity estimates.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        S = argparse.SUPPRESS
        p.add_argument("--config", default=S)
        p.add_argument("--n", type=int, default=S)
        p.add_argument("--e", type=float, default=S)
        p.add_argument("--j", type=int, default=S)
        p.add_argument("--rank", type=int, default=S)
        p.add_argument("--trials", type=int, default=S)
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--kraus", choices=("eq4", "eq7"), default=S)
        p.add_argument("--mode", choices=("eigen", "branch"), default=S)
        p.add_argument("--out", default=S)
        p.add_argument("--workers", type=int, default=S)
        p.add_argument("--marked", type=int, default=S)
        p.add_argument("--space", choices=("state", "choi"), default=S)
        p.add_argument("--per-gate", dest="per_gate", action="store_true", default=S)
        p.add_argument("--inputs-per-trial", dest="inputs_per_trial", type=int, default=S)
        if name == "estimate":
            p.add_argument("--grover", action="store_true", default=S)
            p.add_argument("--qft", action="store_true", default=S)
        if name == "fig1":
            p.add_argument("--rank-a", dest="rank_a", type=int, default=S)
            p.add_argument("--rank-b", dest="rank_b", type=int, default=S)
        if name == "fig2":
            p.add_argument("--n-min", dest="n_min", type=int, default=S)
            p.add_argument("--n-max", dest="n_max", type=int, default=S)
        if name in ("fig3", "channel-check"):
            p.add_argument("--e-list", dest="e_list", default=S)
        if name == "fig3":
            p.add_argument("--n-list", dest="n_list", default=S)
    return parser


def resolve_config(command: str, flags: dict) -> RunConfig:
    cfg = replace(RunConfig(), **COMMAND_DEFAULTS[command])
    path = flags.pop("config", None)
    if path is not None:
        try:
            cfg = replace(cfg, **read_config_file(path))
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
    return replace(cfg, **flags)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = vars(build_parser().parse_args(argv))
        command = ns.pop("command")
        cfg = resolve_config(command, ns)
        effective = ", ".join(f"{f.name}={getattr(cfg, f.name)!r}" for f in fields(cfg))
        print(f"[{command}] {effective}", file=stderr)
        header, rows = COMMANDS[command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_ARGS
    except ResourceError as exc:
        print(f"refused: {exc}", file=stderr)
        return EXIT_RESOURCE
    write_csv(cfg.out, header, rows, stdout)
    if command == "channel-check":
        failed = sorted({f"{r[1]}@e={fmt(r[0])}" for r in rows if r[4] != "ok"})
        if failed:
            print("threshold breached: " + ", ".join(failed), file=stderr)
            return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
