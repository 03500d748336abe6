import numpy as np

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import FlowJacobian, SystemJacobian
from swingcert.src.core.errors import DimensionError, ParameterError


def inertia_matrix(sys: ReducedSystem) -> np.ndarray:
    """M = diag(M_i) / omega_s."""
    return np.diag(sys.m / sys.omega_s)


def damping_matrix(sys: ReducedSystem) -> np.ndarray:
    """D = diag(D_i) / omega_s."""
    return np.diag(sys.d / sys.omega_s)


def build_jacobian(sys: ReducedSystem, l: FlowJacobian) -> SystemJacobian:
    """
    Small-signal Jacobian of the swing equations in (delta, omega):

        J = [[0, I], [-M^-1 L, -M^-1 D]]
    """
    n = sys.n
    if l.l.shape != (n, n):
        raise DimensionError(f"Flow Jacobian is {l.l.shape}, system has {n} machines")
    if np.any(sys.m <= 0.0):
        raise ParameterError("Inertia must be positive to invert M")

    m_inv = sys.omega_s / sys.m
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -m_inv[:, None] * l.l
    j[n:, n:] = -np.diag(sys.d / sys.m)
    return SystemJacobian(j=j, n=n)
