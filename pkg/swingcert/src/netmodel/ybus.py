import logging
from typing import Sequence

import numpy as np

from swingcert.schema.case import BranchRecord, BusRecord
from swingcert.src.core.errors import DanglingReferenceError, NetworkError, ZeroImpedanceBranchError

logger = logging.getLogger(__name__)


def assemble_ybus(buses: Sequence[BusRecord], branches: Sequence[BranchRecord]) -> np.ndarray:
    """
    Bus admittance matrix ordered like ``buses``.

    Branches use the pi model with the off-nominal tap on the from side:
        Y_ff += (y_s + j b/2) / tap^2,  Y_tt += y_s + j b/2,  Y_ft = Y_tf -= y_s / tap
    Bus shunts (g_shunt + j b_shunt) land on the diagonal.
    """
    index = {bus.id: k for k, bus in enumerate(buses)}
    n = len(buses)
    y = np.zeros((n, n), dtype=complex)

    in_service = 0
    for br in branches:
        if not br.status:
            continue
        if br.r == 0.0 and br.x == 0.0:
            raise ZeroImpedanceBranchError(
                f"Branch {br.from_bus}-{br.to_bus} has zero impedance", from_bus=br.from_bus, to_bus=br.to_bus
            )
        try:
            f, t = index[br.from_bus], index[br.to_bus]
        except KeyError as e:
            raise DanglingReferenceError(f"Branch references unknown bus {e.args[0]}", bus=e.args[0]) from e

        ys = 1.0 / complex(br.r, br.x)
        charging = 0.5j * br.b_shunt
        tap = br.tap

        y[f, f] += (ys + charging) / tap**2
        y[t, t] += ys + charging
        y[f, t] -= ys / tap
        y[t, f] -= ys / tap
        in_service += 1

    if in_service == 0:
        raise NetworkError("No branch in service")

    for k, bus in enumerate(buses):
        y[k, k] += complex(bus.g_shunt, bus.b_shunt)

    logger.debug("[Ybus] %d buses, %d branches in service", n, in_service)
    return y
