"""
The analysis pipeline behind the CLI: reduce, solve, certify, spectrum, and optionally
sweep and simulate. Every stage is timed into ``timings_ms``.
"""
import json
import logging
import math
from typing import Optional

from swingcert.schema.case import NetworkCase, ReducedSystem
from swingcert.schema.results import (
    REPORT_SCHEMA,
    AnalysisReport,
    BoundUnits,
    CaseMetadata,
    StabilityVerdict,
    TableRow,
)
from swingcert.src.core.errors import ConsistencyError
from swingcert.src.core.settings import get_settings
from swingcert.src.equilibrium.flow import flow_jacobian, wrap_angles
from swingcert.src.equilibrium.solver import SolverOptions, rebalance, solve_equilibrium
from swingcert.src.graphcert.certificate import certificate
from swingcert.src.graphcert.digraph import check_omega, induced_digraph, laplacian_properties, strongly_connected
from swingcert.src.graphcert.sweep import certificate_margin_search, parse_sweep
from swingcert.src.netmodel.reduction import reduce_case
from swingcert.src.simulate.experiment import perturbation_experiment
from swingcert.src.simulate.swing import SimulationOptions
from swingcert.src.spectral.eigen import spectrum, stability_verdict
from swingcert.src.utils.tables import csv_text
from swingcert.src.utils.timing import StageTimer

logger = logging.getLogger(__name__)

# certify exit codes
EXIT_CERTIFIED = 0
EXIT_ERROR = 1
EXIT_UNCERTIFIED = 2
EXIT_UNSTABLE = 3
EXIT_INCONCLUSIVE = 4

TABLE_HEADER = ["case", "phi_min_over_pi", "phi_max_over_pi", "s_min", "s_max", "abs_re_lambda2", "verdict"]


def analyze_case(
    case: NetworkCase,
    bound_units: Optional[BoundUnits] = None,
    solver_opts: Optional[SolverOptions] = None,
    sweep: Optional[str] = None,
    simulate: bool = False,
    samples: int = 32,
    radius: float = 0.01,
    seed: int = 0,
    sim_opts: Optional[SimulationOptions] = None,
    source: Optional[str] = None,
) -> AnalysisReport:
    """
    Full certification of one case.

    Raises:
        ConsistencyError: certified, inside Omega, strongly connected, in sound units, yet unstable.
    """
    settings = get_settings()
    bound_units = BoundUnits(bound_units or settings.bound_units)
    solver_opts = solver_opts or SolverOptions()
    timings = {}

    # 1. Reduced model and equilibrium
    with StageTimer("reduce", timings):
        sys = reduce_case(case, omega_s=settings.omega_s if case.omega_s is None else case.omega_s)
    with StageTimer("equilibrium", timings):
        eq = solve_equilibrium(sys, None, solver_opts)
        balanced = rebalance(sys, eq)

    # 2. Graph view and certificate
    with StageTimer("digraph", timings):
        graph = induced_digraph(balanced, eq.delta_star)
        omega_check = check_omega(graph, eq.omega_star, margin=settings.phi_margin)
        strong = strongly_connected(graph)
    with StageTimer("certificate", timings):
        cert = certificate(balanced, eq, bound_units)
    with StageTimer("laplacian", timings):
        l = flow_jacobian(balanced, eq.delta_star)
        props = laplacian_properties(l, omega_check)

    # 3. Spectrum
    with StageTimer("spectrum", timings):
        sp = spectrum(balanced, l)
        verdict = stability_verdict(sp)

    theorem_applicable = omega_check.in_omega and strong
    units_sound = bound_units == BoundUnits.PROOF or balanced.omega_s == 1.0
    contradicted = cert.certified and verdict == StabilityVerdict.UNSTABLE
    if contradicted:
        if theorem_applicable and units_sound:
            raise ConsistencyError(
                "Certified equilibrium has an unstable spectrum",
                max_re_nonzero=sp.max_re_nonzero,
                s_max=cert.s_max,
            )
        logger.warning(
            "[Pipeline] Certificate contradicted by the spectrum (applicable=%s, sound units=%s)",
            theorem_applicable, units_sound,
        )

    # 4. Optional studies
    sweep_points = None
    if sweep:
        with StageTimer("sweep", timings):
            kind, scales = parse_sweep(sweep)
            sweep_points = certificate_margin_search(sys, eq, kind, scales, solver_opts, bound_units)

    summary = None
    if simulate:
        with StageTimer("simulation", timings):
            summary, _ = perturbation_experiment(balanced, eq, samples, radius, seed=seed, opts=sim_opts)

    table = TableRow(
        phi_min_over_pi=None if omega_check.phi_min is None else omega_check.phi_min / math.pi,
        phi_max_over_pi=None if omega_check.phi_max is None else omega_check.phi_max / math.pi,
        s_min=cert.s_min,
        s_max=cert.s_max,
        abs_re_lambda2=None if sp.lambda2 is None else abs(sp.lambda2[0]),
    )
    metadata = CaseMetadata(
        name=case.name,
        source=source,
        n_machines=sys.n,
        n_buses=len(case.buses),
        omega_s=sys.omega_s,
        bound_units=bound_units,
        reference_index=eq.reference_index,
    )
    return AnalysisReport(
        case=metadata,
        equilibrium=eq.model_copy(update={"delta_star": wrap_angles(eq.delta_star)}),
        omega_check=omega_check,
        strongly_connected=strong,
        certificate=cert,
        laplacian=props,
        spectrum=sp,
        verdict=verdict,
        theorem_applicable=theorem_applicable,
        units_sound=units_sound,
        certificate_contradicted=contradicted,
        table=table,
        sweep=sweep_points,
        simulation=summary,
        timings_ms=timings,
    )


def certify_exit_code(report: AnalysisReport) -> int:
    if report.verdict == StabilityVerdict.UNSTABLE:
        return EXIT_UNSTABLE
    if report.certificate.certified and report.theorem_applicable:
        return EXIT_CERTIFIED
    if report.verdict == StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER:
        return EXIT_INCONCLUSIVE
    return EXIT_UNCERTIFIED


def spectrum_exit_code(verdict: StabilityVerdict) -> int:
    return {
        StabilityVerdict.ASYMPTOTICALLY_STABLE_REDUCED: EXIT_CERTIFIED,
        StabilityVerdict.UNSTABLE: EXIT_UNSTABLE,
        StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER: EXIT_INCONCLUSIVE,
    }[verdict]


def dump_json(payload: dict) -> str:
    """Sorted, indented JSON; floats keep their shortest round-trip repr."""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def report_json(report: AnalysisReport, omit_timings: bool = False) -> str:
    exclude = {"timings_ms"} if omit_timings else None
    return dump_json(report.model_dump(mode="json", by_alias=True, exclude=exclude))


def table_rows(report: AnalysisReport) -> list:
    t = report.table
    return [
        report.case.name,
        t.phi_min_over_pi,
        t.phi_max_over_pi,
        t.s_min,
        t.s_max,
        t.abs_re_lambda2,
        report.verdict.value,
    ]


def table_csv(reports) -> str:
    return csv_text(TABLE_HEADER, [table_rows(r) for r in reports])


def error_json(error: Exception) -> str:
    if hasattr(error, "to_dict"):
        payload = error.to_dict()
    else:
        payload = {"type": type(error).__name__, "message": str(error)}
    return dump_json({"schema": REPORT_SCHEMA, "error": payload})


def reduced_only_case(name: str, sys: ReducedSystem) -> NetworkCase:
    return NetworkCase(name=name, omega_s=sys.omega_s, reduced=sys)
