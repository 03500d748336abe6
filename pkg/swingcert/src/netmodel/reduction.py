"""
Classical-model reduction to the generator internal nodes.

Loads become constant admittances at the solved voltages, each machine gets
an internal node behind j x'_d, and every network bus is Kron-eliminated.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from swingcert.schema.case import (
    BranchRecord,
    BusRecord,
    GeneratorDynamics,
    NetworkCase,
    PowerFlowSolution,
    ReducedSystem,
)
from swingcert.src.core.errors import CaseFormatError, MissingDynamicsError, ParameterError
from swingcert.src.core.settings import get_settings
from swingcert.src.netmodel.kron import kron_reduce
from swingcert.src.netmodel.powerflow import PowerFlowOptions, solve_power_flow
from swingcert.src.netmodel.ybus import assemble_ybus

logger = logging.getLogger(__name__)

# Declared and solved dispatch may differ by this much before we say so
DISPATCH_TOLERANCE = 1e-6


def build_reduced_system(
    buses: Sequence[BusRecord],
    branches: Sequence[BranchRecord],
    dynamics: Sequence[GeneratorDynamics],
    powerflow_solution: PowerFlowSolution,
    omega_s: float,
) -> ReducedSystem:
    """
    Reduces a solved network to its n machines.

    The machine EMF is E = V_t + j x'_d I_t from the terminal conditions. The
    returned ``p_mech`` is the solved real output of each machine, so the
    internal EMF angles (``delta_init``) are an equilibrium of the reduced model.

    Raises:
        MissingDynamicsError: a generator lacks M, D or x'_d.
        KronReductionError: the network block cannot be eliminated.
    """
    if not dynamics:
        raise CaseFormatError("Case has no generators to reduce to")
    for gen in dynamics:
        if not gen.has_dynamics:
            raise MissingDynamicsError(f"Generator at bus {gen.bus} has no dynamics block", bus=gen.bus)

    nb, ng = len(buses), len(dynamics)
    if powerflow_solution.v_mag.shape != (nb,):
        raise CaseFormatError(f"Power-flow solution has {powerflow_solution.v_mag.shape[0]} voltages for {nb} buses")

    index = {bus.id: k for k, bus in enumerate(buses)}
    y_bus = assemble_ybus(buses, branches)
    v = powerflow_solution.voltages

    # 1. Constant-impedance loads
    s_load = np.array([complex(bus.p_load, bus.q_load) for bus in buses])
    y_load = np.conj(s_load) / np.abs(v) ** 2

    # 2. Terminal conditions and internal EMFs
    s_net = v * np.conj(y_bus @ v)
    gen_bus = np.array([index[gen.bus] for gen in dynamics], dtype=int)
    xd = np.array([gen.xd_prime for gen in dynamics], dtype=float)
    s_gen = s_net[gen_bus] + s_load[gen_bus]
    i_gen = np.conj(s_gen / v[gen_bus])
    emf = v[gen_bus] + 1j * xd * i_gen

    # 3. Augmented network, internal nodes first
    y_aug = np.zeros((ng + nb, ng + nb), dtype=complex)
    y_aug[ng:, ng:] = y_bus + np.diag(y_load)
    y_int = 1.0 / (1j * xd)
    for k, b in enumerate(gen_bus):
        y_aug[k, k] += y_int[k]
        y_aug[ng + b, ng + b] += y_int[k]
        y_aug[k, ng + b] -= y_int[k]
        y_aug[ng + b, k] -= y_int[k]

    y_red = kron_reduce(y_aug, range(ng))

    p_solved = s_gen.real
    for gen, p in zip(dynamics, p_solved):
        if abs(gen.p_mech - p) > DISPATCH_TOLERANCE:
            logger.warning(
                "[Reduce] Bus %d: declared p_mech %.6f differs from solved output %.6f; using solved",
                gen.bus, gen.p_mech, p,
            )

    logger.info("[Reduce] %d buses reduced to %d machines", nb, ng)
    return ReducedSystem.from_admittance(
        y_red,
        v_mag=np.abs(emf),
        m=[gen.inertia_m for gen in dynamics],
        d=[gen.damping_d for gen in dynamics],
        p_mech=p_solved,
        omega_s=omega_s,
        delta_init=np.angle(emf),
        labels=[gen.bus for gen in dynamics],
    )


def reduce_case(
    case: NetworkCase,
    omega_s: Optional[float] = None,
    pf_opts: Optional[PowerFlowOptions] = None,
) -> ReducedSystem:
    """
    Reduced model of a parsed case. A case that already carries ``reduced`` is returned as is;
    otherwise the stored solution is used, or a power flow is run.
    """
    if case.reduced is not None:
        return case.reduced

    omega_s = omega_s or case.omega_s or get_settings().omega_s
    solution = case.solution
    if solution is None:
        solution = solve_power_flow(case, pf_opts)
    return build_reduced_system(case.buses, case.branches, case.generators, solution, omega_s)


def with_branch_resistance(case: NetworkCase, from_bus: int, to_bus: int, r: float) -> NetworkCase:
    """
    Copy of ``case`` with the series resistance of every branch between the two buses set
    to ``r``. Any stored solution or reduced model is dropped so the next reduction re-solves it.

    Raises:
        ParameterError: reduced-only case, no such branch, or an invalid resistance.
    """
    if case.is_reduced_only:
        raise ParameterError("Branch resistances need a network case, not a reduced-only one")
    endpoints = {from_bus, to_bus}
    branches = []
    hits = 0
    for br in case.branches:
        if {br.from_bus, br.to_bus} == endpoints:
            try:
                br = BranchRecord(**{**br.model_dump(), "r": r})
            except ValidationError as e:
                raise ParameterError(f"Invalid resistance for branch {from_bus}-{to_bus}: {e}") from e
            hits += 1
        branches.append(br)
    if hits == 0:
        raise ParameterError(f"No branch {from_bus}-{to_bus} in case {case.name}")

    logger.info("[Reduce] Branch %d-%d resistance set to %g p.u. (%d record(s))", from_bus, to_bus, r, hits)
    return case.model_copy(update={"branches": branches, "solution": None, "reduced": None})
