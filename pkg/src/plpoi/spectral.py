"""Transforms between subcarrier and oversampled time domain, phase helpers, PAPR.

The time-domain convention is the unnormalized oversampled IDFT

    s_m = sum_{n=0}^{N-1} x_n exp(j 2 pi m n / M),   M = L N,

so that ``(1/M) A^H A = I_N`` and ``||A x||^2 = M ||x||^2``. Every product with
``A`` or ``A^H`` goes through an M-point FFT; the dense matrix exists only in
the test suite.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError, DomainError

DEFAULT_OVERSAMPLING = 4


@dataclass(frozen=True)
class TransformPlan:
    """Subcarrier count ``n`` and oversampling factor; ``m = oversampling * n``."""

    n: int
    oversampling: int = DEFAULT_OVERSAMPLING

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if int(self.oversampling) != self.oversampling or self.oversampling < 1:
            raise ConfigError(f"oversampling must be a positive integer, got {self.oversampling}")

    @property
    def m(self):
        return self.n * self.oversampling

    @classmethod
    def for_spectrum(cls, x, oversampling=DEFAULT_OVERSAMPLING):
        return cls(np.shape(x)[-1], oversampling)


def synthesize_time(x, plan=None):
    """Oversampled time waveform ``s = A x``.

    Works along the last axis, so a batch of spectra (one per row) is
    transformed in one call.

    Parameters
    ----------
    x : array_like, complex, shape (..., N)
    plan : TransformPlan, optional
        Defaults to ``TransformPlan(N, 4)``.

    Returns
    -------
    ndarray, complex, shape (..., M)
    """
    x = np.asarray(x, dtype=complex)
    if plan is None:
        plan = TransformPlan.for_spectrum(x)
    if x.ndim == 0 or x.shape[-1] != plan.n:
        raise DimensionError(f"spectrum length {np.shape(x)[-1:]} does not match plan.n={plan.n}")
    # ifft carries a 1/M factor; undo it to keep A unnormalized
    return np.fft.ifft(x, n=plan.m, axis=-1) * plan.m


def analyze_freq(g, plan):
    """Scaled adjoint ``(1/M) A^H g``, the left inverse of :func:`synthesize_time`."""
    g = np.asarray(g, dtype=complex)
    if g.ndim == 0 or g.shape[-1] != plan.m:
        raise DimensionError(f"time vector length {np.shape(g)[-1:]} does not match plan.m={plan.m}")
    return np.fft.fft(g, axis=-1)[..., : plan.n] / plan.m


def wrap_phase(phi):
    """Map angles (radians) onto (-pi, pi]."""
    phi_arr = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi_arr)):
        raise DomainError("phase must be finite")
    wrapped = np.pi - np.mod(np.pi - phi_arr, 2.0 * np.pi)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def papr(s):
    """Peak-to-average power ratio (linear) of ``s`` along its last axis."""
    power = np.abs(np.asarray(s, dtype=complex)) ** 2
    if power.size == 0:
        raise DimensionError("cannot compute the PAPR of an empty vector")
    mean = power.mean(axis=-1)
    if np.any(mean == 0):
        raise DomainError("PAPR of an all-zero vector is undefined")
    ratio = power.max(axis=-1) / mean
    if np.ndim(ratio) == 0:
        return float(ratio)
    return ratio


def papr_db(s):
    return 10.0 * np.log10(papr(s))


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)
