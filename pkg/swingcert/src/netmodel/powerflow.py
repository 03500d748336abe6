"""
Full Newton-Raphson AC power flow in polar coordinates with one slack bus.
"""
import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from swingcert.schema.case import BusType, NetworkCase, PowerFlowSolution
from swingcert.src.core.errors import CaseFormatError, PowerFlowError
from swingcert.src.netmodel.ybus import assemble_ybus

logger = logging.getLogger(__name__)


class PowerFlowOptions(BaseModel):
    tolerance: float = Field(default=1e-10, gt=0.0, description="Max power mismatch in p.u.")
    max_iterations: int = Field(default=30, ge=1)


def _power_derivatives(y: np.ndarray, v: np.ndarray):
    """
    Partial derivatives of the complex injections S = V conj(Y V) w.r.t. |V| and angle.
    """
    i_bus = y @ v
    v_norm = v / np.abs(v)
    ds_dvm = v[:, None] * np.conj(y * v_norm[None, :]) + np.diag(np.conj(i_bus) * v_norm)
    ds_dva = 1j * v[:, None] * np.conj(np.diag(i_bus) - y * v[None, :])
    return ds_dvm, ds_dva


def solve_power_flow(case: NetworkCase, opts: Optional[PowerFlowOptions] = None) -> PowerFlowSolution:
    """
    Solves bus voltages for the case dispatch.

    PV setpoints come from the bus ``v_mag``; PV and slack real power from the
    generator ``p_mech``. A PV bus without an in-service generator is solved as PQ.

    Raises:
        PowerFlowError: the iteration did not reach ``opts.tolerance``.
    """
    opts = opts or PowerFlowOptions()
    buses = case.buses
    n = len(buses)
    index = case.bus_index()
    y = assemble_ybus(buses, case.branches)

    # 1. Scheduled injections
    s_bus = np.array([complex(-bus.p_load, -bus.q_load) for bus in buses])
    has_gen = np.zeros(n, dtype=bool)
    for gen in case.generators:
        k = index[gen.bus]
        s_bus[k] += gen.p_mech
        has_gen[k] = True

    # 2. Bus classification
    ref = [k for k, bus in enumerate(buses) if bus.bus_type == BusType.SLACK]
    if len(ref) != 1:
        raise CaseFormatError(f"Power flow needs exactly one slack bus, found {len(ref)}")
    pv = [k for k, bus in enumerate(buses) if bus.bus_type == BusType.PV and has_gen[k]]
    pq = [k for k in range(n) if k not in ref and k not in pv]
    for k, bus in enumerate(buses):
        if bus.bus_type == BusType.PV and not has_gen[k]:
            logger.info("[PowerFlow] Bus %d has no generator, solved as PQ", bus.id)

    pvpq = np.array(pv + pq, dtype=int)
    pq = np.array(pq, dtype=int)
    n_pvpq = len(pvpq)

    v_mag = np.array([bus.v_mag for bus in buses], dtype=float)
    v_ang = np.array([bus.v_ang for bus in buses], dtype=float)
    v_mag[pq] = np.where(v_mag[pq] > 0.0, v_mag[pq], 1.0)
    v = v_mag * np.exp(1j * v_ang)

    def mismatch(v: np.ndarray) -> np.ndarray:
        mis = v * np.conj(y @ v) - s_bus
        return np.concatenate([mis.real[pvpq], mis.imag[pq]])

    f = mismatch(v)
    norm_f = float(np.max(np.abs(f))) if f.size else 0.0
    iterations = 0

    # 3. Newton iterations
    while norm_f > opts.tolerance and iterations < opts.max_iterations:
        iterations += 1
        ds_dvm, ds_dva = _power_derivatives(y, v)
        jac = np.block([
            [ds_dva[np.ix_(pvpq, pvpq)].real, ds_dvm[np.ix_(pvpq, pq)].real],
            [ds_dva[np.ix_(pq, pvpq)].imag, ds_dvm[np.ix_(pq, pq)].imag],
        ])
        try:
            dx = -np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as e:
            raise PowerFlowError(f"Singular power-flow Jacobian at iteration {iterations}", iterations=iterations) from e

        v_ang[pvpq] += dx[:n_pvpq]
        v_mag[pq] += dx[n_pvpq:]
        v = v_mag * np.exp(1j * v_ang)

        f = mismatch(v)
        norm_f = float(np.max(np.abs(f)))
        logger.debug("[PowerFlow] iteration %d: mismatch %.3e", iterations, norm_f)

    if not np.isfinite(norm_f) or norm_f > opts.tolerance:
        raise PowerFlowError(
            f"Power flow did not converge in {iterations} iterations (mismatch {norm_f:.3e})",
            iterations=iterations,
            mismatch=norm_f,
        )

    logger.info("[PowerFlow] Converged in %d iterations (mismatch %.3e)", iterations, norm_f)
    return PowerFlowSolution(v_mag=np.abs(v), v_ang=np.angle(v), iterations=iterations, mismatch=norm_f)
