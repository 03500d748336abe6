import logging
from typing import Iterable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from swingcert.src.core.errors import DimensionError, KronReductionError

logger = logging.getLogger(__name__)

RCOND_LIMIT = 1e-13


def kron_reduce(y_full: np.ndarray, retained: Iterable[int]) -> np.ndarray:
    """
    Eliminates every node outside ``retained`` (zero current injection there).

    Returns the Schur complement Y_rr - Y_re Y_ee^-1 Y_er over the retained
    indices, in the order they were given.

    Raises:
        KronReductionError: the eliminated block is singular (reciprocal condition below 1e-13).
    """
    y_full = np.asarray(y_full, dtype=complex)
    if y_full.ndim != 2 or y_full.shape[0] != y_full.shape[1]:
        raise DimensionError(f"Admittance matrix must be square, got shape {y_full.shape}")

    n = y_full.shape[0]
    keep = [int(k) for k in retained]
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"Retained indices must be distinct and within 0..{n - 1}")

    kept = set(keep)
    drop = [k for k in range(n) if k not in kept]
    y_rr = y_full[np.ix_(keep, keep)]
    if not drop:
        return y_rr.copy()

    y_re = y_full[np.ix_(keep, drop)]
    y_er = y_full[np.ix_(drop, keep)]
    y_ee = y_full[np.ix_(drop, drop)]

    with np.errstate(all="ignore"):
        cond = np.linalg.cond(y_ee, 1)
    rcond = 0.0 if not np.isfinite(cond) or cond == 0.0 else 1.0 / cond
    if rcond < RCOND_LIMIT:
        raise KronReductionError(
            f"Eliminated block is singular to working precision (rcond = {rcond:.3e})", rcond=float(rcond)
        )

    # Dense LU with partial pivoting
    factors = lu_factor(y_ee, check_finite=True)
    reduced = y_rr - y_re @ lu_solve(factors, y_er)
    logger.debug("[Kron] Eliminated %d of %d nodes (rcond %.3e)", len(drop), n, rcond)
    return reduced
