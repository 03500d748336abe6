"""
The quadratic pencil P(lambda) = lambda^2 M + lambda D + L, singular exactly on the spectrum of J.
"""
import numpy as np
from scipy.linalg import svdvals

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import FlowJacobian
from swingcert.src.spectral.jacobian import build_jacobian, damping_matrix, inertia_matrix


def pencil_matrix(sys: ReducedSystem, l: FlowJacobian, lam: complex) -> np.ndarray:
    lam = complex(lam)
    return lam**2 * inertia_matrix(sys) + lam * damping_matrix(sys) + l.l


def pencil_residual(sys: ReducedSystem, l: FlowJacobian, lam: complex) -> float:
    """
    sigma_min(P(lambda)) / ||P(lambda)||_F; zero means P(lambda) is singular.
    """
    p = pencil_matrix(sys, l, lam)
    scale = np.linalg.norm(p, "fro")
    if scale == 0.0:
        return 0.0
    return float(svdvals(p, check_finite=False)[-1] / scale)


def pencil_determinant_roots(sys: ReducedSystem, l: FlowJacobian) -> np.ndarray:
    """
    Roots of det P(lambda), a polynomial of degree 2n.

    The coefficients are interpolated from 2n + 1 samples on the circle of radius ||J||_F
    (an inverse DFT), then handed to a companion-matrix root finder. Meant for n <= 4.
    """
    n = sys.n
    count = 2 * n + 1
    rho = float(np.linalg.norm(build_jacobian(sys, l).j, "fro"))
    nodes = rho * np.exp(2j * np.pi * np.arange(count) / count)
    values = np.array([np.linalg.det(pencil_matrix(sys, l, z)) for z in nodes])

    # coefficient k of det P(rho z), lowest degree first
    scaled = (np.fft.fft(values) / count).real
    roots = np.roots(scaled[::-1])
    return np.sort_complex(rho * roots)
