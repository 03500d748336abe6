"""
The weighted digraph behind the flow Jacobian and the M-matrix checks on L.

At an angle vector delta, arc (i, j) exists iff i != j and Y_ij > 0 and carries
w_ij = V_i V_j Y_ij sin(phi_ij), phi_ij = theta_ij - delta_i + delta_j.
The Laplacian D+(G) - A(G) of that graph is L.
"""
import itertools
import logging
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import FlowJacobian, InducedDigraph, LaplacianProperties, OmegaCheck
from swingcert.src.core.settings import get_settings
from swingcert.src.equilibrium.flow import phase_differences, wrap_angles

logger = logging.getLogger(__name__)

MINOR_LIMIT = 8
MINOR_TOLERANCE = 1e-10
EIGEN_TOLERANCE = 1e-9
ZERO_EIGEN_FACTOR = 1e-7
ROW_SUM_TOLERANCE = 1e-12


def induced_digraph(sys: ReducedSystem, delta) -> InducedDigraph:
    phi = phase_differences(sys, delta)
    weights = sys.coupling * np.sin(phi)

    support = sys.y_mag > 0.0
    np.fill_diagonal(support, False)
    weights = np.where(support, weights, 0.0)

    arcs = [(int(i), int(j)) for i, j in zip(*np.nonzero(support))]
    return InducedDigraph(n=sys.n, weights=weights, phi=wrap_angles(phi), arcs=arcs)


def check_omega(graph: InducedDigraph, omega=None, margin: Optional[float] = None) -> OmegaCheck:
    """
    Strict membership 0 < phi_ij < pi on every arc (shrunk by ``margin``) and omega = 0.
    """
    margin = get_settings().phi_margin if margin is None else margin
    omega = np.zeros(graph.n) if omega is None else np.asarray(omega, dtype=float)
    omega_zero = bool(np.all(omega == 0.0))

    violating = []
    values = []
    for i, j in graph.arcs:
        phi = float(graph.phi[i, j])
        values.append(phi)
        if not margin < phi < np.pi - margin:
            violating.append((i, j, phi))

    in_omega = omega_zero and not violating
    if violating:
        logger.debug("[Omega] %d arc(s) outside (0, pi)", len(violating))
    return OmegaCheck(
        in_omega=in_omega,
        omega_zero=omega_zero,
        phi_min=min(values) if values else None,
        phi_max=max(values) if values else None,
        violating_pairs=violating,
    )


def strongly_connected(graph: InducedDigraph) -> bool:
    """Single strong component over the positive-weight arcs."""
    if graph.n <= 1:
        return True
    adjacency = csr_matrix(graph.weights > 0.0)
    n_components, _ = connected_components(adjacency, directed=True, connection="strong")
    return n_components == 1


def min_principal_minor(l: np.ndarray):
    """
    Smallest principal minor and whether every minor clears its tolerance.

    A minor passes at -1e-10 or above. Below that it still passes when it lies within
    the roundoff of an LU determinant, 16 k eps prod_i ||row_i||_1 over the rows of the
    k x k submatrix; the determinant of a full Laplacian is zero up to that roundoff.
    """
    n = l.shape[0]
    smallest = np.inf
    ok = True
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(n), k):
            block = l[np.ix_(subset, subset)]
            minor = float(np.linalg.det(block))
            roundoff = 16.0 * k * np.finfo(float).eps * float(np.prod(np.sum(np.abs(block), axis=1)))
            tolerance = -max(MINOR_TOLERANCE, roundoff)
            smallest = min(smallest, minor)
            if minor < tolerance:
                ok = False
    return smallest, ok


def laplacian_properties(l: FlowJacobian, omega: Optional[OmegaCheck] = None) -> LaplacianProperties:
    """
    Singular M-matrix checks on L. Without an Omega check, applicability follows the sign pattern.
    Violations are listed, never raised.
    """
    mat = l.l
    n = mat.shape[0]
    norm_inf = float(np.max(np.sum(np.abs(mat), axis=1))) if n else 0.0
    violations = []

    row_sum_inf = float(np.max(np.abs(mat.sum(axis=1)))) if n else 0.0
    if row_sum_inf > ROW_SUM_TOLERANCE * max(1.0, norm_inf):
        violations.append(f"row sums: max |L 1| = {row_sum_inf:.3e}")

    diag = np.diag(mat)
    off = mat - np.diag(diag)
    sign_pattern_ok = bool(np.all(diag >= 0.0) and np.all(off <= 0.0))
    if not sign_pattern_ok:
        violations.append("sign pattern: negative diagonal or positive off-diagonal entry")

    radius = np.sum(np.abs(off), axis=1)
    gershgorin_ok = bool(np.all(diag - radius >= -ROW_SUM_TOLERANCE * max(1.0, norm_inf)))
    if not gershgorin_ok:
        violations.append("gershgorin: a disc reaches into the open left half-plane")

    minors_checked = n <= MINOR_LIMIT
    smallest = None
    if minors_checked:
        smallest, minors_ok = min_principal_minor(mat)
        if not minors_ok:
            violations.append(f"principal minor: smallest {smallest:.3e}")

    eigs = scipy.linalg.eigvals(mat)
    min_re = float(np.min(eigs.real))
    if min_re < -EIGEN_TOLERANCE:
        violations.append(f"eigenvalue: Re = {min_re:.3e} < 0")
    zero_count = int(np.sum(np.abs(eigs) <= ZERO_EIGEN_FACTOR * norm_inf))
    if zero_count == 0:
        violations.append("no zero eigenvalue")

    applicable = omega.in_omega if omega is not None else sign_pattern_ok
    return LaplacianProperties(
        applicable=applicable,
        row_sum_inf=row_sum_inf,
        sign_pattern_ok=sign_pattern_ok,
        gershgorin_ok=gershgorin_ok,
        minors_checked=minors_checked,
        min_principal_minor=smallest,
        eigenvalues=eigs,
        min_real_eigenvalue=min_re,
        zero_eigenvalue_count=zero_count,
        violations=violations,
    )
