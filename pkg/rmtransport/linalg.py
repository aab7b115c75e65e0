"""
Direct solver for block-tridiagonal systems.
"""
import logging

import numpy as np

from .errors import SingularSystemError

logger = logging.getLogger(__name__)

CONDITION_LIMIT = np.finfo(float).eps


def _check_pivot(block: np.ndarray, index: int):
    # |det| against Hadamard's bound flags blocks that are singular to working precision
    bound = np.prod(np.linalg.norm(block, axis=1))
    if not np.all(np.isfinite(block)) or abs(np.linalg.det(block)) <= CONDITION_LIMIT * bound:
        message = f"Singular or ill-conditioned pivot block at cell {index}"
        logger.error(message)
        raise SingularSystemError(message, cell=index)


def solve_block_tridiagonal(lower: np.ndarray, diagonal: np.ndarray, upper: np.ndarray,
                            rhs: np.ndarray) -> np.ndarray:
    """
    Solves a block-tridiagonal system with block Thomas elimination.

    Row i of the system reads lower[i] u[i-1] + diagonal[i] u[i] + upper[i] u[i+1] = rhs[i];
    lower[0] and upper[-1] are ignored.

    Parameters
    ----------
    lower, diagonal, upper : numpy.ndarray
        Blocks of shape (n, k, k).
    rhs : numpy.ndarray
        Right-hand side of shape (n, k).

    Returns
    -------
    numpy.ndarray
        Solution of shape (n, k).

    Raises
    ------
    SingularSystemError
        If a pivot block is singular to working precision.
    """
    count, size = rhs.shape
    eliminated_upper = np.empty_like(upper)
    eliminated_rhs = np.empty_like(rhs)
    for i in range(count):
        block = diagonal[i]
        right = rhs[i]
        if i > 0:
            block = block - lower[i] @ eliminated_upper[i - 1]
            right = right - lower[i] @ eliminated_rhs[i - 1]
        _check_pivot(block, i)
        solution = np.linalg.solve(block, np.column_stack([upper[i], right]))
        eliminated_upper[i] = solution[:, :size]
        eliminated_rhs[i] = solution[:, size]

    result = np.empty_like(rhs)
    result[-1] = eliminated_rhs[-1]
    for i in range(count - 2, -1, -1):
        result[i] = eliminated_rhs[i] - eliminated_upper[i] @ result[i + 1]
    return result
