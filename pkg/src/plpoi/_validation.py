"""Input validation helpers.

scikit-learn's ``check_array`` rejects complex input, so the estimators and
the functional API share these lighter checks instead.
"""

import numbers

import numpy as np

from .exceptions import ConfigError, DimensionError, DomainError


def check_vector(x, name="x", length=None, dtype=complex):
    """Return ``x`` as a finite, non-empty 1-D array of ``dtype``."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must not be empty")
    if length is not None and arr.size != length:
        raise DimensionError(f"{name} has length {arr.size}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains NaN or Inf")
    return arr


def check_spectra(X, name="X", n_features=None):
    """Return ``X`` as a finite 2-D complex array (one spectrum per row).

    A single 1-D spectrum is promoted to a one-row matrix.
    """
    arr = np.asarray(X, dtype=complex)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise DimensionError(
            f"{name} has {arr.shape[1]} subcarriers, estimator was fitted with {n_features}"
        )
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains NaN or Inf")
    return arr


def check_unimodular(x, name="x", atol=1e-9):
    if np.max(np.abs(np.abs(x) - 1.0)) > atol:
        raise DomainError(f"{name} must have unit-magnitude entries")
    return x


def check_theta(theta):
    """PD threshold must lie in the open interval (0, pi/4)."""
    if not isinstance(theta, numbers.Real) or not np.isfinite(theta):
        raise ConfigError(f"theta must be a finite real, got {theta!r}")
    if not 0.0 < theta < np.pi / 4:
        raise ConfigError(f"theta must lie in (0, pi/4), got {theta}")
    return float(theta)


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ConfigError(f"{name} must be a finite real, got {value!r}")
    if value < 0 or (strict and value == 0):
        raise ConfigError(f"{name} must be {'>' if strict else '>='} 0, got {value}")
    return value


def check_fitted(estimator, attributes):
    from sklearn.exceptions import NotFittedError

    if not all(hasattr(estimator, a) for a in attributes):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet. "
            "Call 'fit' with appropriate arguments first."
        )
