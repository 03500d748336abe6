"""
Command-line front end.

    certify   full pipeline, JSON report (or the table row as CSV)
    spectrum  eigenvalues of J as re,im CSV
    retune    certificate under new M and D or edited line resistances
    reduce    reduced-only case JSON
    simulate  trajectory CSV of one perturbed run
    report    table CSV over several cases
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from swingcert.schema.results import REPORT_SCHEMA, BoundUnits, TrajectoryClass
from swingcert.src.cli import pipeline
from swingcert.src.core.errors import ParameterError, SwingCertError
from swingcert.src.core.settings import get_settings
from swingcert.src.equilibrium.flow import flow_jacobian, flow_sums
from swingcert.src.equilibrium.solver import SolverOptions, rebalance, solve_equilibrium
from swingcert.src.graphcert.certificate import certificate, retune_certificate
from swingcert.src.graphcert.sweep import sweep_csv
from swingcert.src.netmodel.parser import emit_case, load_case
from swingcert.src.netmodel.reduction import reduce_case, with_branch_resistance
from swingcert.src.simulate.experiment import angle_perturbation
from swingcert.src.simulate.swing import SimulationOptions, integrate, trajectory_csv
from swingcert.src.spectral.eigen import spectrum, stability_verdict
from swingcert.src.utils.tables import csv_text

logger = logging.getLogger(__name__)


def _vector(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _branch_spec(text: str) -> Tuple[int, int, float]:
    parts = text.split(",")
    try:
        f, t, r = parts
        return int(f), int(t), float(r)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected from_bus,to_bus,r, got {text!r}")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_case_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("case", help="Case file (.m MATPOWER subset or native .json)")
    p.add_argument("--dynamics", help="Machine data sidecar for MATPOWER cases")
    p.add_argument("--reference", type=int, help="Reference machine index (default: largest inertia)")
    p.add_argument("--out", help="Write output here instead of stdout")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--radius", type=float, default=0.01, help="Angle perturbation norm in radians")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=1e-3)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit through the diagnostic JSON path (code 1), not argparse's code 2."""

    def error(self, message):
        raise ParameterError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="swingcert",
        description="Small-signal stability certificates for lossy swing-equation models",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    units = [u.value for u in BoundUnits]

    p = sub.add_parser("certify", help="Run the full certification pipeline")
    _add_case_args(p)
    _add_sim_args(p)
    p.add_argument("--bound-units", choices=units, help="theorem: D^2/2M, proof: D^2/(2 M omega_s)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--sweep", help="Margin search, e.g. d:1,2,4 or m:0.5,1 or load:0.8,1.2")
    p.add_argument("--sweep-csv", help="Write the sweep as sweep_param,min_S,re_lambda2 CSV")
    p.add_argument("--simulate", action="store_true", help="Append a perturbation experiment")
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--omit-timings", action="store_true", help="Leave stage timings out of the report")

    p = sub.add_parser("spectrum", help="Eigenvalues of the system Jacobian")
    _add_case_args(p)
    p.add_argument("--pencil-check", action="store_true", help="Add the pencil residual of each eigenvalue")

    p = sub.add_parser("retune", help="Certificate with new inertia, damping or line resistances")
    p.add_argument("case", nargs="?", help="Case file; omit when --flow-sums is given")
    p.add_argument("--dynamics")
    p.add_argument("--reference", type=int)
    p.add_argument("--out")
    p.add_argument("--m", type=_vector, help="New inertia constants, comma separated")
    p.add_argument("--d", type=_vector, help="New damping coefficients, comma separated")
    p.add_argument(
        "--branch-r", type=_branch_spec, action="append",
        help="from_bus,to_bus,r: new series resistance in p.u.; repeatable, needs a network case",
    )
    p.add_argument("--flow-sums", type=_vector, help="Flow sums F_i to retune without a case")
    p.add_argument("--bound-units", choices=units)
    p.add_argument("--omega-s", type=float, default=1.0, help="omega_s for proof units with --flow-sums")

    p = sub.add_parser("reduce", help="Emit the reduced model as a native case")
    _add_case_args(p)

    p = sub.add_parser("simulate", help="Trajectory of one perturbed run")
    _add_case_args(p)
    _add_sim_args(p)
    p.add_argument("--stride", type=int, default=10, help="Record every k-th step")

    p = sub.add_parser("report", help="Table row per case as CSV")
    p.add_argument("cases", nargs="+")
    p.add_argument("--bound-units", choices=units)
    p.add_argument("--out")

    return parser


def _solver_opts(args) -> SolverOptions:
    return SolverOptions(reference=args.reference)


def _sim_opts(args, stride: int = 10) -> SimulationOptions:
    try:
        return SimulationOptions(t_end=args.t_end, dt=args.dt, record_stride=stride)
    except ValueError as e:
        raise ParameterError(f"Invalid simulation options: {e}") from e


def _solve(args):
    case = load_case(args.case, args.dynamics, require_dynamics=True)
    sys_ = reduce_case(case, omega_s=case.omega_s or get_settings().omega_s)
    eq = solve_equilibrium(sys_, None, _solver_opts(args))
    return case, sys_, eq


def cmd_certify(args) -> int:
    case = load_case(args.case, args.dynamics, require_dynamics=True)
    sim_opts = _sim_opts(args) if args.simulate else None
    report = pipeline.analyze_case(
        case,
        bound_units=args.bound_units,
        solver_opts=_solver_opts(args),
        sweep=args.sweep,
        simulate=args.simulate,
        samples=args.samples,
        radius=args.radius,
        seed=args.seed,
        sim_opts=sim_opts,
        source=str(args.case),
    )
    if args.sweep_csv and report.sweep is not None:
        Path(args.sweep_csv).write_text(sweep_csv(report.sweep), encoding="utf-8")

    if args.format == "csv":
        _emit(pipeline.table_csv([report]), args.out)
    else:
        _emit(pipeline.report_json(report, omit_timings=args.omit_timings), args.out)
    return pipeline.certify_exit_code(report)


def cmd_spectrum(args) -> int:
    _, sys_, eq = _solve(args)
    balanced = rebalance(sys_, eq)
    sp = spectrum(balanced, flow_jacobian(balanced, eq.delta_star), pencil=args.pencil_check)

    header = ["re", "im"] + (["pencil_residual"] if args.pencil_check else [])
    rows = []
    for k, z in enumerate(sp.eigenvalues):
        row = [float(z.real), float(z.imag)]
        if args.pencil_check:
            row.append(float(sp.pencil_residuals[k]))
        rows.append(row)
    _emit(csv_text(header, rows), args.out)
    return pipeline.spectrum_exit_code(stability_verdict(sp))


def cmd_retune(args) -> int:
    units = BoundUnits(args.bound_units or get_settings().bound_units)
    payload = {"schema": REPORT_SCHEMA}

    if args.flow_sums is not None:
        if args.m is None or args.d is None:
            raise ParameterError("--flow-sums needs both --m and --d")
        new = retune_certificate(args.flow_sums, args.m, args.d, units, omega_s=args.omega_s)
        payload.update({"old": None, "new": new.model_dump(mode="json"), "verdict": None})
    else:
        if not args.case:
            raise ParameterError("retune needs a case file or --flow-sums")
        if args.m is None and args.d is None and not args.branch_r:
            raise ParameterError("retune needs --m, --d or --branch-r")
        case, sys_, eq = _solve(args)
        balanced = rebalance(sys_, eq)
        old = certificate(balanced, eq, units)

        # 1. Network edits move the operating point
        target, target_eq = balanced, eq
        if args.branch_r:
            edited = case
            for f, t, r in args.branch_r:
                edited = with_branch_resistance(edited, f, t, r)
            edited_sys = reduce_case(edited, omega_s=sys_.omega_s)
            target_eq = solve_equilibrium(edited_sys, None, _solver_opts(args))
            target = rebalance(edited_sys, target_eq)

        # 2. New machine data at that point
        m = target.m if args.m is None else args.m
        d = target.d if args.d is None else args.d
        new = retune_certificate(flow_sums(target, target_eq.delta_star), m, d, units, omega_s=target.omega_s)
        retuned = target.model_copy(update={"m": np.asarray(m, dtype=float), "d": np.asarray(d, dtype=float)})
        verdict = stability_verdict(spectrum(retuned, flow_jacobian(retuned, target_eq.delta_star), pencil=False))
        payload.update({
            "old": old.model_dump(mode="json"),
            "new": new.model_dump(mode="json"),
            "verdict": verdict.value,
            "branches": [[f, t, r] for f, t, r in args.branch_r or []],
        })

    _emit(pipeline.dump_json(payload), args.out)
    return pipeline.EXIT_CERTIFIED if new.certified else pipeline.EXIT_UNCERTIFIED


def cmd_reduce(args) -> int:
    case = load_case(args.case, args.dynamics, require_dynamics=True)
    sys_ = reduce_case(case, omega_s=case.omega_s or get_settings().omega_s)
    _emit(emit_case(pipeline.reduced_only_case(case.name, sys_)), args.out)
    return 0


def cmd_simulate(args) -> int:
    _, sys_, eq = _solve(args)
    balanced = rebalance(sys_, eq)
    opts = _sim_opts(args, stride=args.stride)
    x_star = np.concatenate([eq.delta_star, np.zeros(sys_.n)])
    start = x_star.copy()
    start[: sys_.n] += angle_perturbation(sys_.n, args.radius, args.seed, 0)

    traj = integrate(balanced, start, x_star=x_star, opts=opts)
    _emit(trajectory_csv(traj), args.out)
    return {
        TrajectoryClass.CONVERGED: 0,
        TrajectoryClass.DIVERGED: pipeline.EXIT_UNSTABLE,
        TrajectoryClass.UNDECIDED: pipeline.EXIT_INCONCLUSIVE,
    }[traj.classification]


def cmd_report(args) -> int:
    reports = []
    for path in args.cases:
        case = load_case(path, require_dynamics=True)
        reports.append(pipeline.analyze_case(case, bound_units=args.bound_units, source=str(path)))
    _emit(pipeline.table_csv(reports), args.out)
    return 0


COMMANDS = {
    "certify": cmd_certify,
    "spectrum": cmd_spectrum,
    "retune": cmd_retune,
    "reduce": cmd_reduce,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    command = "swingcert"
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        return COMMANDS[command](args)
    except (SwingCertError, OSError) as e:
        logger.error("[CLI] %s failed: %s", command, e)
        sys.stdout.write(pipeline.error_json(e))
        return pipeline.EXIT_ERROR
