import numpy as np

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import FlowJacobian
from swingcert.src.core.errors import DimensionError


def wrap_angles(x) -> np.ndarray:
    """Reduces angles modulo 2 pi into (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    return np.pi - np.mod(np.pi - x, 2.0 * np.pi)


def _check_delta(sys: ReducedSystem, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (sys.n,):
        raise DimensionError(f"delta must have length {sys.n}, got shape {delta.shape}")
    return delta


def phase_differences(sys: ReducedSystem, delta) -> np.ndarray:
    """phi_ij = theta_ij - delta_i + delta_j (unwrapped)."""
    delta = _check_delta(sys, delta)
    return sys.y_ang - delta[:, None] + delta[None, :]


def flow_function(sys: ReducedSystem, delta) -> np.ndarray:
    """
    Electrical power injected by each machine:
        P_e_i = sum_j V_i V_j Y_ij cos(theta_ij - delta_i + delta_j), self term included.
    """
    phi = phase_differences(sys, delta)
    return np.sum(sys.coupling * np.cos(phi), axis=1)


def flow_sums(sys: ReducedSystem, delta) -> np.ndarray:
    """F_i = sum_{j != i} V_i V_j Y_ij sin(phi_ij), the diagonal of L."""
    s = sys.coupling * np.sin(phase_differences(sys, delta))
    return s.sum(axis=1) - np.diag(s)


def flow_jacobian_matrix(sys: ReducedSystem, delta) -> np.ndarray:
    phi = phase_differences(sys, delta)
    s = sys.coupling * np.sin(phi)
    np.fill_diagonal(s, 0.0)
    l = -s
    np.fill_diagonal(l, s.sum(axis=1))
    return l


def flow_jacobian(sys: ReducedSystem, delta) -> FlowJacobian:
    """
    L = dP_e / d delta. Diagonal sum_{j != i} V_i V_j Y_ij sin(phi_ij), off-diagonal
    -V_i V_j Y_ij sin(phi_ij); rows sum to zero at any delta.
    """
    delta = _check_delta(sys, delta)
    return FlowJacobian(l=flow_jacobian_matrix(sys, delta), evaluated_at=delta.copy())
