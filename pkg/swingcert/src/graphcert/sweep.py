"""
Certificate margin search: min_i S_i against the spectral margin Re(lambda_2)
while scaling damping, inertia or loading.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import BoundUnits, Equilibrium, SweepKind, SweepPoint
from swingcert.src.core.errors import EquilibriumError, ParameterError
from swingcert.src.equilibrium.flow import flow_jacobian
from swingcert.src.equilibrium.solver import SolverOptions, rebalance, solve_equilibrium
from swingcert.src.graphcert.certificate import certificate
from swingcert.src.spectral.eigen import spectrum
from swingcert.src.utils.tables import csv_text

logger = logging.getLogger(__name__)

SWEEP_HEADER = "sweep_param,min_S,re_lambda2"


def parse_sweep(text: str) -> Tuple[SweepKind, List[float]]:
    """
    ``kind:v1,v2,...`` with kind d (damping scale), m (inertia scale) or load (P_m scale).
    """
    kind, sep, values = text.partition(":")
    if not sep:
        raise ParameterError(f"Sweep must look like kind:v1,v2,... got {text!r}")
    try:
        kind = SweepKind(kind.strip().lower())
    except ValueError:
        raise ParameterError(f"Unknown sweep kind {kind!r}; use d, m or load")
    try:
        scales = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"Sweep values must be numbers, got {values!r}")
    if not scales:
        raise ParameterError("Sweep needs at least one value")
    if not all(np.isfinite(scales)):
        raise ParameterError("Sweep values must be finite")
    return kind, scales


def _scaled(sys: ReducedSystem, kind: SweepKind, scale: float) -> ReducedSystem:
    if kind == SweepKind.DAMPING:
        update = {"d": sys.d * scale}
    elif kind == SweepKind.INERTIA:
        update = {"m": sys.m * scale}
    else:
        update = {"p_mech": sys.p_mech * scale}
    return sys.model_copy(update=update)


def certificate_margin_search(
    sys: ReducedSystem,
    eq: Equilibrium,
    kind: SweepKind,
    scales: Sequence[float],
    opts: Optional[SolverOptions] = None,
    bound_units: BoundUnits = BoundUnits.THEOREM,
) -> List[SweepPoint]:
    """
    One row per scale, in the order given. Points whose equilibrium cannot be solved
    are recorded with their error and carry no values.
    """
    kind = SweepKind(kind)
    if kind != SweepKind.LOADING and any(v <= 0.0 for v in scales):
        raise ParameterError("Damping and inertia scales must be positive")

    opts = (opts or SolverOptions()).model_copy(update={"reference": eq.reference_index})
    points = []
    for scale in scales:
        scaled = _scaled(sys, kind, scale)
        try:
            point_eq = solve_equilibrium(scaled, eq.delta_star, opts)
        except EquilibriumError as e:
            logger.warning("[Sweep] %s=%g skipped: %s", kind.value, scale, e)
            points.append(SweepPoint(kind=kind, sweep_param=scale, error=str(e)))
            continue

        balanced = rebalance(scaled, point_eq)
        cert = certificate(balanced, point_eq, bound_units)
        sp = spectrum(balanced, flow_jacobian(balanced, point_eq.delta_star), pencil=False)
        points.append(SweepPoint(
            kind=kind,
            sweep_param=scale,
            min_s=cert.s_min,
            re_lambda2=sp.lambda2[0] if sp.lambda2 is not None else None,
            certified=cert.certified,
        ))
    return points


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    """Plot-ready CSV; skipped points are left out."""
    rows = [(p.sweep_param, p.min_s, p.re_lambda2) for p in points if p.error is None]
    return csv_text(SWEEP_HEADER.split(","), rows)
