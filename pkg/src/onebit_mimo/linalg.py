"""Small linear-algebra and special-function kernel.

All higher modules funnel their solves and tail probabilities through these
wrappers so that conditioning failures surface as typed errors instead of
silently noisy results.
"""

import numpy as np
import scipy.linalg
import scipy.special

from .exceptions import RankDeficiencyError, SingularMatrixError

# Relative pivot threshold below which an LU factor is declared singular.
PIVOT_RTOL = 1e-12
# Relative singular-value threshold for declaring rank deficiency.
RANK_RTOL = 1e-10


def erfc(x):
    """Complementary error function, elementwise.

    Accurate in both tails; relative error stays small even where the
    result underflows toward the smallest normal floats.
    """
    return scipy.special.erfc(x)


def log_ndtr(x):
    """Log of the standard normal CDF, elementwise, stable for x << 0."""
    return scipy.special.log_ndtr(x)


def hermitian(matrix):
    """Conjugate transpose of the last two axes."""
    return np.conjugate(np.swapaxes(np.asarray(matrix), -2, -1))


def solve_linear(coefficients, rhs):
    """Solve ``coefficients @ x = rhs`` via LU with partial pivoting.

    Parameters
    ----------
    coefficients : array_like
        Square complex matrix.
    rhs : array_like
        Right-hand side, one or more columns.

    Returns
    -------
    numpy.ndarray
        Solution with the same trailing shape as ``rhs``.

    Raises
    ------
    SingularMatrixError
        If any pivot magnitude falls below ``PIVOT_RTOL`` times the largest
        pivot magnitude. The error carries the system dimension.
    """
    a = np.ascontiguousarray(coefficients, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"coefficients must be square, got shape {a.shape}")
    b = np.asarray(rhs, dtype=np.complex128)
    if b.shape[0] != a.shape[0]:
        raise ValueError(
            f"rhs first dimension {b.shape[0]} does not match system size {a.shape[0]}"
        )
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError("coefficients must contain only finite entries")
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    largest = pivots.max()
    if largest == 0.0 or pivots.min() <= PIVOT_RTOL * largest:
        raise SingularMatrixError(
            f"linear system of dimension {a.shape[0]} is numerically singular "
            f"(smallest pivot {pivots.min():.3e}, largest {largest:.3e})",
            dimension=a.shape[0],
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def pseudoinverse(matrix):
    """Left Moore-Penrose pseudoinverse of a tall full-column-rank matrix.

    Computes ``(A^H A)^[-1] A^H`` after an SVD-based rank check.

    Raises
    ------
    RankDeficiencyError
        If the smallest singular value is below ``RANK_RTOL`` times the
        largest, or the matrix has fewer rows than columns.
    """
    a = np.ascontiguousarray(matrix, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got ndim={a.ndim}")
    if a.shape[0] < a.shape[1]:
        raise RankDeficiencyError(
            f"matrix with shape {a.shape} has fewer rows than columns"
        )
    singular_values = np.linalg.svd(a, compute_uv=False)
    if singular_values[0] == 0.0 or singular_values[-1] <= RANK_RTOL * singular_values[0]:
        raise RankDeficiencyError(
            f"matrix with shape {a.shape} is rank deficient "
            f"(singular values span {singular_values[-1]:.3e} to {singular_values[0]:.3e})"
        )
    gram = hermitian(a) @ a
    return solve_linear(gram, hermitian(a))
