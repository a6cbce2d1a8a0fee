"""Input validation helpers used by the estimator-facing API."""

import numbers

import numpy as np


def check_count(value, name, minimum=1):
    """Validate an integer count and return it as a Python int."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_positive(value, name):
    """Validate a strictly positive finite real scalar and return a float."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def check_real(value, name):
    """Validate a finite real scalar and return a float."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_complex_matrix(value, name, rows=None, cols=None):
    """Coerce to a finite 2-D complex128 array, checking shape if given.

    Parameters
    ----------
    value : array_like
        Input to validate.
    name : str
        Name used in error messages.
    rows, cols : int, optional
        Exact row or column count to enforce.

    Returns
    -------
    numpy.ndarray
        C-contiguous complex128 array of shape ``(rows, cols)``.
    """
    arr = np.ascontiguousarray(value, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} must contain only finite entries")
    return arr


def check_complex_vector(value, name, length=None):
    """Coerce to a finite 1-D complex128 array, checking length if given."""
    arr = np.ascontiguousarray(value, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if arr.size < 1:
        raise ValueError(f"{name} must be non-empty")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} must contain only finite entries")
    return arr


def check_pmf(value, name, atol=1e-9):
    """Validate a probability vector: entries in [0, 1] summing to one."""
    from .exceptions import InvalidPmfError

    arr = np.ascontiguousarray(value, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidPmfError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(arr)):
        raise InvalidPmfError(f"{name} must contain only finite entries")
    if np.any(arr < -atol):
        raise InvalidPmfError(f"{name} has negative entries (min {arr.min()})")
    total = float(arr.sum())
    if abs(total - 1.0) > atol:
        raise InvalidPmfError(f"{name} must sum to 1, got {total}")
    return arr
