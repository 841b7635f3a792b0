"""Command-line front end: bound tables, pulse optimization, duration sweeps,
trajectory simulation, verification suites and protocol summaries.

Every subcommand writes delimited output (CSV/JSON) plus, unless --no-plot is
given, a rendered PNG figure next to it, and a run manifest recording the
fully resolved configuration so the run can be reproduced exactly.

Exit codes: 0 success, 1 verification-check failure, 2 validation error,
3 optimization failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, bound, core, grape, protocols
from .core import GG, ControlPulse

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_VALIDATION = 2
EXIT_OPT_FAILED = 3
EXIT_IO = 4

DT_TARGET = 6.8 / 400.0  # default control-sample spacing, units 1/B


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fail(message: str, code: int) -> CliError:
    return CliError(message, code)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise _fail(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _write_json(path: Path, payload: dict) -> None:
    try:
        Path(path).write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n")
    except OSError as exc:
        raise _fail(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_manifest(out: Path, subcommand: str, config: dict, outputs: list[Path]) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "version": __version__,
        "outputs": [str(p) for p in outputs],
    }
    path = out.with_suffix(out.suffix + ".manifest.json")
    _write_json(path, manifest)
    return path


def _fmt(x: float) -> str:
    return repr(float(x) + 0.0)  # round-trip exact; the addition clears -0.0


def _load_pulse(path: str) -> ControlPulse:
    try:
        return ControlPulse.load(path)
    except FileNotFoundError as exc:
        raise _fail(f"pulse file not found: {path}", EXIT_IO) from exc
    except ValueError as exc:
        raise _fail(str(exc), EXIT_VALIDATION) from exc


def _steps_for(bt: float) -> int:
    return max(2, round(bt / DT_TARGET))


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------


def cmd_bound(args) -> int:
    if not (0.0 < args.s_min < args.s_max <= 1.0):
        raise _fail("require 0 < --s-min < --s-max <= 1", EXIT_VALIDATION)
    grid = np.linspace(args.s_min, args.s_max, args.points)
    closed, quadrature = bound.eta_min()
    rows = []
    for s in grid:
        duration = 0.0 if s >= 1.0 else bound.optimal_duration(float(s))
        rows.append([_fmt(s), _fmt(bound.g_of_s(s)), _fmt(bound.sdot_optimal(s)), _fmt(duration)])
    rows.append(["eta_min", _fmt(closed), _fmt(quadrature), ""])
    out = Path(args.out)
    _write_csv(out, ["s", "G", "Sdot", "T_of_s0"], rows)
    outputs = [out]
    if not args.no_plot:
        from . import plotting

        data = np.array([r[:4] for r in rows[:-1]], dtype=float)
        outputs.append(
            plotting.plot_bound_curves(
                data[:, 0], data[:, 1], data[:, 2], data[:, 3], out.with_suffix(".png")
            )
        )
    outputs.append(
        _write_manifest(
            out,
            "bound",
            {"s_min": args.s_min, "s_max": args.s_max, "points": args.points},
            outputs,
        )
    )
    print(f"eta_min closed form {closed:.10f}, quadrature {quadrature:.10f}")
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def _optimize_config(args) -> grape.OptimizationConfig:
    try:
        return grape.OptimizationConfig(
            duration_bt=args.bt,
            steps=args.n if args.n is not None else _steps_for(args.bt),
            gamma_schedule=tuple(args.gamma_schedule),
            restarts=args.restarts,
            seed=args.seed,
            bfgs=grape.BfgsParams(max_iter=args.max_iter),
            amplitude_bound=args.amplitude_bound,
            workers=args.workers,
        )
    except ValueError as exc:
        raise _fail(str(exc), EXIT_VALIDATION) from exc


def _report_payload(report: grape.OptimizationReport, config: grape.OptimizationConfig) -> dict:
    return {
        "BT": config.duration_bt,
        "N": config.steps,
        "seed": report.seed,
        "restart_index": report.restart_index,
        "success": report.success,
        "infidelity": report.infidelity,
        "rydberg_time": report.rydberg_time,
        "eta": report.eta,
        "pulse_area": report.pulse_area,
        "message": report.message,
    }


def cmd_optimize(args) -> int:
    config = _optimize_config(args)
    report = grape.optimize_bell_preparation(config)

    out = Path(args.out)
    report.pulse.save(out)
    trace_path = Path(args.trace) if args.trace else out.with_suffix(".trace.csv")
    _write_csv(
        trace_path,
        ["stage", "gamma", "iterations", "J", "F", "Tr"],
        [
            [i, _fmt(st.gamma), st.iterations, _fmt(st.cost), _fmt(st.fidelity), _fmt(st.rydberg_time)]
            for i, st in enumerate(report.trace)
        ],
    )
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    _write_json(report_path, _report_payload(report, config))
    outputs = [out, trace_path, report_path]
    if not args.no_plot:
        from . import plotting

        traj = core.propagate(report.pulse, GG)
        outputs.append(
            plotting.plot_pulse(
                traj.times,
                report.pulse.omega,
                report.pulse.delta,
                np.abs(traj.states) ** 2,
                out.with_suffix(".png"),
                title=f"BT={config.duration_bt} 1-F={report.infidelity:.2e} eta={report.eta:.4f}",
            )
        )
    outputs.append(_write_manifest(out, "optimize", _config_dict(config), outputs))
    print(
        f"infidelity {report.infidelity:.3e}  eta {report.eta:.6f}  "
        f"area {report.pulse_area:.4f}  success {report.success}"
    )
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    if not report.success:
        print(f"optimization failed: {report.message}", file=sys.stderr)
        return EXIT_OPT_FAILED
    return EXIT_OK


def _config_dict(config: grape.OptimizationConfig) -> dict:
    payload = asdict(config)
    payload["gamma_schedule"] = list(config.gamma_schedule)
    return payload


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    if not (np.pi < args.bt_min < args.bt_max):
        raise _fail("require pi < --BT-min < --BT-max", EXIT_VALIDATION)
    grid = np.linspace(args.bt_min, args.bt_max, args.points)
    rows = []
    reports = []
    for i, bt in enumerate(grid):
        config = grape.OptimizationConfig(
            duration_bt=float(bt),
            steps=_steps_for(float(bt)),
            restarts=args.restarts,
            seed=args.seed + i,
            bfgs=grape.BfgsParams(max_iter=args.max_iter),
            workers=args.workers,
        )
        report = grape.optimize_bell_preparation(config)
        reports.append(report)
        rows.append(
            [_fmt(bt), _fmt(report.infidelity), _fmt(report.eta), _fmt(report.pulse_area), config.seed]
        )
        print(
            f"BT {bt:6.3f}: infidelity {report.infidelity:.3e} eta {report.eta:.6f} "
            f"area {report.pulse_area:.4f}{'' if report.success else '  [failed]'}"
        )
    out = Path(args.out)
    _write_csv(out, ["BT", "infidelity", "eta", "area", "seed"], rows)
    outputs = [out]
    if not args.no_plot:
        from . import plotting

        outputs.append(
            plotting.plot_sweep(
                grid,
                np.array([r.eta for r in reports]),
                np.array([r.infidelity for r in reports]),
                out.with_suffix(".png"),
            )
        )
    outputs.append(
        _write_manifest(
            out,
            "sweep",
            {
                "bt_min": args.bt_min,
                "bt_max": args.bt_max,
                "points": args.points,
                "restarts": args.restarts,
                "seed": args.seed,
                "max_iter": args.max_iter,
            },
            outputs,
        )
    )
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    pulse = _load_pulse(args.pulse)
    if args.gamma < 0:
        raise _fail("--gamma must be non-negative", EXIT_VALIDATION)
    traj = core.propagate(pulse, GG, gamma_over_B=args.gamma)
    pops = np.abs(traj.states) ** 2
    p_r = core.rydberg_populations(traj)

    if args.gamma == 0.0:
        pair = core.propagate(pulse, core.embed_symmetric(GG))
        analysis = core.trajectory_entropy_analysis(pair)
        entropy = analysis.entropy
        ratio = analysis.ratio
        inv_rate = analysis.inv_rate
        valid = analysis.valid
    else:
        # decayed run: entropy of the renormalized snapshots, no rate columns
        entropy = np.empty(len(traj.times))
        for k, state in enumerate(traj.states):
            psi = core.embed_symmetric(state)
            form = core.schmidt_decompose(core.bipartite_from_two_atom(psi, normalize=True))
            entropy[k] = core.min_entropy(form)
        ratio = np.full_like(entropy, np.nan)
        inv_rate = np.full_like(entropy, np.nan)
        valid = np.zeros(entropy.shape, dtype=bool)

    rows = []
    for k, t in enumerate(traj.times):
        rows.append(
            [
                _fmt(t),
                _fmt(pops[k, 0]),
                _fmt(pops[k, 1]),
                _fmt(pops[k, 2]),
                _fmt(p_r[k]),
                _fmt(entropy[k]),
                _fmt(ratio[k]) if np.isfinite(ratio[k]) else "",
                _fmt(inv_rate[k]) if np.isfinite(inv_rate[k]) else "",
            ]
        )
    out = Path(args.out)
    _write_csv(out, ["t", "P_gg", "P_W", "P_rr", "P_r", "S", "ratio", "inv_Sdot"], rows)
    outputs = [out]
    if not args.no_plot:
        from . import plotting

        outputs.append(
            plotting.plot_pulse(
                traj.times, pulse.omega, pulse.delta, pops, out.with_suffix(".png"),
                title=f"gamma/B = {args.gamma}",
            )
        )
        if args.gamma == 0.0 and valid.any():
            outputs.append(
                plotting.plot_trajectory_bound(
                    entropy, ratio, inv_rate, valid, out.with_suffix(".bound.png")
                )
            )
    outputs.append(
        _write_manifest(out, "simulate", {"pulse": args.pulse, "gamma": args.gamma}, outputs)
    )
    tr = core.integrated_rydberg_time(traj)
    print(f"T_r (trapezoid) = {tr:.6f}, final norm^2 = {np.linalg.norm(traj.states[-1])**2:.8f}")
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_gradients(seed: int, pulses: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    for i in range(pulses):
        bt, n = 6.8, 2000
        t = (np.arange(n) + 0.5) * (bt / n)
        area = rng.uniform(2.0, 3.0)
        omega = (2 * area / bt) * np.sin(np.pi * t / bt) ** 2
        omega *= 1.0 + 0.2 * rng.uniform(-1, 1, n)
        delta = np.full(n, rng.uniform(-0.5, 0.5)) * (1 + 0.2 * rng.uniform(-1, 1, n))
        pulse = ControlPulse(bt, omega, delta)
        res = grape.finite_difference_check(pulse, gamma=1e-3, epsilon=1e-6, sample=40, seed=i)
        checks.append(
            {
                "check": f"fd_deviation_pulse_{i}",
                "value": res.max_deviation,
                "tolerance": 5e-3,
                "passed": bool(res.max_deviation <= 5e-3),
            }
        )
        if i < 2:  # refinement halves the deviation (first-order gradients)
            fine = grape.finite_difference_check(
                pulse.refine(2), gamma=1e-3, epsilon=1e-6, sample=40, seed=i
            )
            ratio = res.max_deviation / fine.max_deviation
            checks.append(
                {
                    "check": f"fd_halving_pulse_{i}",
                    "value": ratio,
                    "tolerance": "within 20% of 2",
                    "passed": bool(1.6 <= ratio <= 2.4),
                }
            )
    return checks


def _verify_oracle(seed: int) -> tuple[list[dict], list[list]]:
    checks = []
    rows = []
    for i, s in enumerate((0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)):
        res = bound.minimize_ratio_numeric(s, d=2, restarts=64, seed=seed + i)
        g = bound.g_of_s(s)
        rel = abs(res.ratio_min - g) / g
        rows.append([_fmt(s), _fmt(res.ratio_min), _fmt(g), _fmt(rel), res.restarts_used])
        checks.append(
            {
                "check": f"oracle_s_{s}",
                "value": rel,
                "tolerance": 1e-3,
                "passed": bool(rel <= 1e-3),
            }
        )
    return checks, rows


def _verify_weakbound(seed: int) -> list[dict]:
    max_f = bound.max_weak_bound_f()
    rate_constant, eta_weak = bound.weak_bound_constants()
    checks = [
        {"check": "max_f", "value": max_f, "tolerance": "0.478 +- 1e-3",
         "passed": bool(abs(max_f - 0.478) <= 1e-3)},
        {"check": "rate_constant", "value": rate_constant, "tolerance": "0.956 +- 1e-3",
         "passed": bool(abs(rate_constant - 0.956) <= 1e-3)},
        {"check": "eta_weak", "value": eta_weak, "tolerance": "1.05 +- 0.01",
         "passed": bool(abs(eta_weak - 1.05) <= 0.01)},
    ]
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(1000):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        state = core.BipartiteState(m / np.linalg.norm(m), rydberg_index=1)
        if not bound.vn_rate_bound_check(state).satisfied:
            violations += 1
    checks.append(
        {"check": "vn_rate_inequality_1000_states", "value": violations,
         "tolerance": "0 violations", "passed": bool(violations == 0)}
    )
    return checks


def cmd_verify(args) -> int:
    suites = ("gradients", "oracle", "weakbound") if args.suite == "all" else (args.suite,)
    checks: list[dict] = []
    outputs: list[Path] = []
    out = Path(args.out)
    for suite in suites:
        if suite == "gradients":
            checks.extend(_verify_gradients(args.seed, args.pulses))
        elif suite == "oracle":
            oracle_checks, rows = _verify_oracle(args.seed)
            checks.extend(oracle_checks)
            csv_path = out.with_suffix(".oracle.csv")
            _write_csv(csv_path, ["s", "ratio_min", "G", "rel_err", "restarts"], rows)
            outputs.append(csv_path)
        elif suite == "weakbound":
            checks.extend(_verify_weakbound(args.seed))
    all_passed = all(c["passed"] for c in checks)
    verdict = {"suite": args.suite, "seed": args.seed, "passed": all_passed, "checks": checks}
    _write_json(out, verdict)
    outputs.insert(0, out)
    outputs.append(_write_manifest(out, "verify", {"suite": args.suite, "seed": args.seed}, outputs))
    for c in checks:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['check']}: {c['value']}")
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# protocols / weyl
# ---------------------------------------------------------------------------


def cmd_protocols(args) -> int:
    reports = [
        protocols.naive_protocol(),
        protocols.cz_wait_protocol_d2()[1],
        protocols.cz_wait_protocol_d3(),
    ]
    header = f"{'protocol':<22}{'eta_state':>12}{'eta_gate':>12}{'fidelity':>14}{'checks':>8}"
    print(header)
    rows = []
    for rep in reports:
        eta_state = "-" if rep.eta_state is None else f"{rep.eta_state:.6f}"
        eta_gate = "-" if rep.eta_gate is None else f"{rep.eta_gate:.6f}"
        fid = "-" if rep.fidelity is None else f"{rep.fidelity:.10f}"
        ok = "pass" if rep.phase_ok else "FAIL"
        print(f"{rep.name:<22}{eta_state:>12}{eta_gate:>12}{fid:>14}{ok:>8}")
        rows.append([rep.name, eta_state, eta_gate, fid, ok])
    if args.out:
        out = Path(args.out)
        _write_csv(out, ["protocol", "eta_state", "eta_gate", "fidelity", "checks"], rows)
        _write_manifest(out, "protocols", {}, [out])
        print(f"wrote {out}")
    if not all(rep.phase_ok for rep in reports):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_weyl(args) -> int:
    pulse = _load_pulse(args.pulse)
    unitary = protocols.pulse_unitary(pulse)
    canonical = protocols.weyl_coordinates(unitary)
    folded = protocols.weyl_coordinates_folded(unitary)
    print(f"canonical (c1 in [0, pi]):  ({canonical[0]:.6f}, {canonical[1]:.6f}, {canonical[2]:.6f})")
    print(f"folded   (c1 <= pi/2):      ({folded[0]:.6f}, {folded[1]:.6f}, {folded[2]:.6f})")
    if args.out:
        _write_json(
            Path(args.out),
            {"pulse": args.pulse, "canonical": list(canonical), "folded": list(folded)},
        )
        _write_manifest(Path(args.out), "weyl", {"pulse": args.pulse}, [Path(args.out)])
        print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydbell",
        description="Decay-error bounds and optimal-control pulses for "
        "Rydberg-blockade entanglement generation (units B = 1).",
    )
    parser.add_argument("--version", action="version", version=f"rydbell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="tabulate the closed-form bound curves")
    p.add_argument("--s-min", type=float, default=0.01)
    p.add_argument("--s-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--out", default="bound.csv")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("optimize", help="find a Bell-preparation pulse")
    p.add_argument("--BT", dest="bt", type=float, default=6.8)
    p.add_argument("--N", dest="n", type=int, default=None,
                   help="control samples (default keeps dt near 0.017/B)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--gamma-schedule", type=float, nargs="+",
                   default=list(grape.DEFAULT_GAMMA_SCHEDULE))
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--amplitude-bound", type=float, default=None)
    p.add_argument("--workers", type=int, default=grape.default_workers())
    p.add_argument("--out", default="pulse.json")
    p.add_argument("--trace", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimize over a range of durations")
    p.add_argument("--BT-min", dest="bt_min", type=float, default=4.0)
    p.add_argument("--BT-max", dest="bt_max", type=float, default=12.0)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--workers", type=int, default=grape.default_workers())
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="propagate a pulse file and export the trajectory")
    p.add_argument("--pulse", required=True)
    p.add_argument("--gamma", type=float, default=0.0, help="decay rate Gamma/B")
    p.add_argument("--out", default="trajectory.csv")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run validation suites")
    p.add_argument("--suite", choices=("gradients", "oracle", "weakbound", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pulses", type=int, default=10, help="pulses in the gradients suite")
    p.add_argument("--out", default="verify.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("protocols", help="reference protocol table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_protocols)

    p = sub.add_parser("weyl", help="Weyl-chamber coordinates of a pulse's two-qubit gate")
    p.add_argument("--pulse", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_weyl)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
