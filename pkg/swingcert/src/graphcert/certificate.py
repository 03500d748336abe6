"""
Per-node stability certificate.

    S_i = F_i - D_i^2 / (2 M_i),   F_i = sum_{j != i} V_i V_j Y_ij sin(theta_ij - delta*_i + delta*_j)

All S_i <= 0 at an equilibrium inside Omega certifies asymptotic stability.
With ``BoundUnits.PROOF`` the bound is D_i^2 / (2 M_i omega_s).
"""
import logging
from typing import Optional

import numpy as np

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import BoundUnits, CertificateReport, Equilibrium
from swingcert.src.core.errors import DimensionError, ParameterError
from swingcert.src.equilibrium.flow import flow_sums

logger = logging.getLogger(__name__)


def damping_bound(m, d, bound_units: BoundUnits = BoundUnits.THEOREM, omega_s: float = 1.0) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    d = np.asarray(d, dtype=float)
    bound = d**2 / (2.0 * m)
    if BoundUnits(bound_units) == BoundUnits.PROOF:
        bound = bound / omega_s
    return bound


def _assemble(flow_sum, m, d, bound_units, omega_s, q=None) -> CertificateReport:
    flow_sum = np.array(flow_sum, dtype=float)
    bound = damping_bound(m, d, bound_units, omega_s)
    s = flow_sum - bound
    return CertificateReport(
        s=s,
        flow_sum=flow_sum,
        bound=bound,
        q=q,
        certified=bool(np.max(s) <= 0.0),
        worst_node=int(np.argmax(s)),
        bound_units=BoundUnits(bound_units),
    )


def certificate(
    sys: ReducedSystem,
    eq: Equilibrium,
    bound_units: Optional[BoundUnits] = None,
) -> CertificateReport:
    """
    Evaluates the certificate at ``eq.delta_star``.

    F_i is the diagonal of L at delta*, summed without forming L; q_i = -(F_i + V_i^2 Y_ii sin theta_ii) is the
    reactive power injected at node i, self term included.
    """
    bound_units = BoundUnits.THEOREM if bound_units is None else BoundUnits(bound_units)
    flow_sum = flow_sums(sys, eq.delta_star)
    self_term = sys.v_mag**2 * np.diag(sys.y_mag) * np.sin(np.diag(sys.y_ang))
    q = -(flow_sum + self_term)

    report = _assemble(flow_sum, sys.m, sys.d, bound_units, sys.omega_s, q=q)
    logger.info(
        "[Certificate] max S = %.6g at machine %d (%s units): %s",
        report.s_max, report.worst_node, bound_units.value,
        "certified" if report.certified else "not certified",
    )
    return report


def retune_certificate(
    flow_sums,
    m_new,
    d_new,
    bound_units: BoundUnits = BoundUnits.THEOREM,
    omega_s: float = 1.0,
) -> CertificateReport:
    """
    Re-evaluates S with new inertia and damping; the operating point and so F_i are unchanged.

    Raises:
        DimensionError: vectors of different lengths.
        ParameterError: a non-positive M or D.
    """
    flow_sums = np.asarray(flow_sums, dtype=float)
    m_new = np.asarray(m_new, dtype=float)
    d_new = np.asarray(d_new, dtype=float)
    if flow_sums.ndim != 1 or flow_sums.size == 0:
        raise DimensionError("flow_sums must be a non-empty vector")
    if m_new.shape != flow_sums.shape or d_new.shape != flow_sums.shape:
        raise DimensionError(
            f"Expected {flow_sums.size} values for M and D, got {m_new.size} and {d_new.size}"
        )
    if np.any(m_new <= 0.0) or np.any(d_new <= 0.0):
        raise ParameterError("Retuned inertia and damping must be positive")
    if omega_s <= 0.0:
        raise ParameterError("omega_s must be positive")
    return _assemble(flow_sums, m_new, d_new, bound_units, omega_s)
