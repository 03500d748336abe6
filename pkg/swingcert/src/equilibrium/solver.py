import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import Equilibrium
from swingcert.src.core.errors import DimensionError, EquilibriumNotConverged, ParameterError, SingularNewtonMatrix
from swingcert.src.equilibrium.flow import flow_function, flow_jacobian_matrix

logger = logging.getLogger(__name__)


class SolverOptions(BaseModel):
    tolerance: float = Field(default=1e-10, gt=0.0, description="Max |P_m - P_e| at non-reference machines")
    max_iterations: int = Field(default=50, ge=0)
    reference: Optional[int] = Field(default=None, description="Reference machine; largest inertia when unset")
    max_halvings: int = Field(default=8, ge=0)


def reference_machine(sys: ReducedSystem, reference: Optional[int] = None) -> int:
    if reference is None:
        # First of the largest inertias
        return int(np.argmax(sys.m))
    if not 0 <= reference < sys.n:
        raise ParameterError(f"Reference machine {reference} out of range 0..{sys.n - 1}")
    return int(reference)


def solve_equilibrium(
    sys: ReducedSystem,
    delta_init=None,
    opts: Optional[SolverOptions] = None,
) -> Equilibrium:
    """
    Newton iteration on the n-1 free angles; the reference angle stays at its initial value.

    The reference machine absorbs the lossy power imbalance, reported as
    ``slack_adjustment`` = P_m_ref - P_e_ref(delta*). Steps are halved (up to
    ``max_halvings`` times) while the residual grows.

    Raises:
        EquilibriumNotConverged: tolerance not reached in ``max_iterations``; carries the residual trace.
        SingularNewtonMatrix: the reduced flow Jacobian cannot be solved.
    """
    opts = opts or SolverOptions()
    if delta_init is None:
        delta_init = sys.delta_init if sys.delta_init is not None else np.zeros(sys.n)
    delta = np.array(delta_init, dtype=float)
    if delta.shape != (sys.n,):
        raise DimensionError(f"delta_init must have length {sys.n}, got shape {delta.shape}")

    ref = reference_machine(sys, opts.reference)
    free = np.array([k for k in range(sys.n) if k != ref], dtype=int)

    def residual(angles: np.ndarray) -> np.ndarray:
        return (sys.p_mech - flow_function(sys, angles))[free]

    def size(r: np.ndarray) -> float:
        return float(np.max(np.abs(r))) if r.size else 0.0

    r = residual(delta)
    norm = size(r)
    trace = [norm]
    iterations = 0

    while norm > opts.tolerance and iterations < opts.max_iterations:
        l_red = flow_jacobian_matrix(sys, delta)[np.ix_(free, free)]
        try:
            step = np.linalg.solve(l_red, r)
        except np.linalg.LinAlgError as e:
            raise SingularNewtonMatrix(f"Reduced Newton matrix is singular at iteration {iterations}") from e
        if not np.all(np.isfinite(step)):
            raise SingularNewtonMatrix(f"Newton step is not finite at iteration {iterations}")

        t = 1.0
        trial = delta.copy()
        trial[free] += step
        r_trial = residual(trial)
        halvings = 0
        while size(r_trial) > norm and halvings < opts.max_halvings:
            t *= 0.5
            halvings += 1
            trial = delta.copy()
            trial[free] += t * step
            r_trial = residual(trial)

        delta, r = trial, r_trial
        norm = size(r)
        iterations += 1
        trace.append(norm)
        logger.debug("[Newton] iteration %d: residual %.3e (step %.4g)", iterations, norm, t)

    if not np.isfinite(norm) or norm > opts.tolerance:
        raise EquilibriumNotConverged(
            f"Equilibrium not found in {iterations} iterations (residual {norm:.3e})", trace=trace
        )

    slack = float(sys.p_mech[ref] - flow_function(sys, delta)[ref])
    logger.info("[Newton] Converged in %d iterations, slack adjustment %.3e at machine %d", iterations, slack, ref)
    return Equilibrium(
        delta_star=delta,
        omega_star=np.zeros(sys.n),
        residual_inf=norm,
        reference_index=ref,
        slack_adjustment=slack,
        iterations=iterations,
        trace=trace,
    )


def rebalance(sys: ReducedSystem, eq: Equilibrium) -> ReducedSystem:
    """
    Moves the slack adjustment into the reference machine's P_m so delta* is an exact equilibrium.
    """
    p_mech = sys.p_mech.copy()
    p_mech[eq.reference_index] -= eq.slack_adjustment
    return sys.model_copy(update={"p_mech": p_mech})
