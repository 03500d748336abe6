"""
Dense eigenanalysis of the system Jacobian and the stability verdict.
"""
import logging
from typing import Optional

import numpy as np
import scipy.linalg

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import FlowJacobian, SpectrumReport, StabilityVerdict, SystemJacobian
from swingcert.src.core.errors import DimensionError, EigenSolverError
from swingcert.src.spectral.jacobian import build_jacobian
from swingcert.src.spectral.pencil import pencil_residual

logger = logging.getLogger(__name__)

# zero_tol = re_tol = TOLERANCE_FACTOR * ||J||_F
TOLERANCE_FACTOR = 1e-7


def eigenvalues(a) -> np.ndarray:
    """
    All eigenvalues of a real square matrix (LAPACK geev: balancing, Hessenberg, shifted QR),
    sorted by real then imaginary part.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"Matrix must be square, got shape {a.shape}")
    if a.size == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise EigenSolverError("Matrix has non-finite entries")
    try:
        eigs = scipy.linalg.eigvals(a, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise EigenSolverError(f"Eigenvalue iteration failed: {e}") from e
    return np.sort_complex(eigs.astype(complex))


def _lambda2_key(z: complex):
    return abs(z.real), abs(z.imag), 0 if z.imag >= 0.0 else 1


def summarize_spectrum(eigs, norm_j: float, residuals=None) -> SpectrumReport:
    """
    Builds a SpectrumReport from raw eigenvalues and the Frobenius norm of the matrix they came from.
    """
    eigs = np.sort_complex(np.asarray(eigs, dtype=complex))
    tol = TOLERANCE_FACTOR * norm_j
    zero_cluster = [k for k, z in enumerate(eigs) if abs(z) <= tol]
    nonzero = [complex(z) for k, z in enumerate(eigs) if k not in set(zero_cluster)]

    lambda2 = None
    max_re = None
    if nonzero:
        best = min(nonzero, key=_lambda2_key)
        lambda2 = (best.real, best.imag)
        max_re = max(z.real for z in nonzero)

    if residuals is not None:
        residuals = np.asarray(residuals, dtype=float)
    return SpectrumReport(
        eigenvalues=eigs,
        zero_cluster=zero_cluster,
        lambda2=lambda2,
        max_re_nonzero=max_re,
        pencil_residuals=residuals,
        zero_tol=tol,
        re_tol=tol,
        norm_j=norm_j,
    )


def spectrum(
    sys: ReducedSystem,
    l: FlowJacobian,
    jac: Optional[SystemJacobian] = None,
    pencil: bool = True,
) -> SpectrumReport:
    jac = jac or build_jacobian(sys, l)
    eigs = eigenvalues(jac.j)
    residuals = [pencil_residual(sys, l, z) for z in eigs] if pencil else None
    report = summarize_spectrum(eigs, float(np.linalg.norm(jac.j, "fro")), residuals)
    logger.info(
        "[Spectrum] %d eigenvalues, %d in zero cluster, max Re(nonzero) = %s",
        len(eigs), len(report.zero_cluster), report.max_re_nonzero,
    )
    return report


def stability_verdict(sp: SpectrumReport) -> StabilityVerdict:
    """
    Stable on the reference-reduced state space iff the only zero-cluster eigenvalue is the
    translation mode and every other eigenvalue sits left of -re_tol.
    """
    if sp.max_re_nonzero is not None and sp.max_re_nonzero > sp.re_tol:
        return StabilityVerdict.UNSTABLE
    if (
        len(sp.zero_cluster) == 1
        and sp.max_re_nonzero is not None
        and sp.max_re_nonzero < -sp.re_tol
    ):
        return StabilityVerdict.ASYMPTOTICALLY_STABLE_REDUCED
    return StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER
