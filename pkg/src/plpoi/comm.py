"""Link-level evaluation: flat channels, one-tap equalization, Monte Carlo BER, theory curves.

Noise convention: QPSK symbols carry unit energy and 2 bits, so a given
E_b/N_0 maps to a complex noise variance ``1 / (2 * ebn0_linear)`` per
subcarrier. The transmit spectrum is used as designed; no power
renormalization is applied to non-unimodular (baseline) spectra.
"""

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import rng as rngmod
from .exceptions import ConfigError, DegenerateWarning
from .spectral import db_to_linear
from .waveform import demodulate_qpsk, random_info_spectrum

BER_COLUMNS = ("method", "channel", "ebn0_db", "trials", "bit_errors", "ber")
CHANNELS = ("awgn", "rayleigh")


@dataclass(frozen=True)
class ChannelSample:
    """Flat per-symbol channel gain ``h`` and complex noise variance ``noise_var``."""

    h: complex = 1.0
    noise_var: float = 0.0

    def __post_init__(self):
        if not self.noise_var >= 0:
            raise ConfigError(f"noise_var must be >= 0, got {self.noise_var}")


@dataclass(frozen=True)
class BerPoint:
    ebn0_db: float
    ber: float
    trials: int
    errors: int
    bits: int

    @property
    def standard_error(self):
        """Binomial standard error; assumes independent bit errors (AWGN), too small under fading."""
        return float(np.sqrt(self.ber * (1.0 - self.ber) / self.bits))


def noise_variance(ebn0_db):
    return 1.0 / (2.0 * db_to_linear(ebn0_db))


def apply_channel(x, sample, rng):
    """``y = h x + w`` with ``w`` circular complex Gaussian of variance ``sample.noise_var``."""
    x = np.asarray(x, dtype=complex)
    y = sample.h * x
    if sample.noise_var > 0:
        y = y + rngmod.complex_normal(rng, x.shape, sample.noise_var)
    return y


def equalize(y, h):
    """One-tap zero-forcing equalizer ``y / h``; ``h == 0`` erases the symbol (all zeros)."""
    y = np.asarray(y, dtype=complex)
    if h == 0:
        warnings.warn("zero channel gain, symbol erased", DegenerateWarning, stacklevel=2)
        return np.zeros_like(y)
    return y / h


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def _check_order(mq):
    if mq != 4:
        raise ConfigError(f"only QPSK (Mq = 4) is supported, got {mq}")


def ber_theory_awgn(ebn0_db, mq=4):
    """Closed-form AWGN curve ``2(Mq-1)/(Mq log2 Mq) Q(sqrt(6 Eb/N0 log2 Mq / (Mq^2 - 1)))``.

    With ``Mq = 4`` this evaluates to ``0.75 Q(sqrt(0.8 Eb/N0))``, which is the
    4-PAM expression and sits above the exact Gray-QPSK curve
    :func:`ber_qpsk_awgn`.
    """
    _check_order(mq)
    g = db_to_linear(ebn0_db)
    k = np.log2(mq)
    return 2.0 * (mq - 1) / (mq * k) * q_function(np.sqrt(6.0 * g * k / (mq**2 - 1)))


def ber_theory_rayleigh(ebn0_db, mq=4):
    """Closed-form flat-Rayleigh curve ``(Mq-1)/(Mq log2 Mq) (1 - sqrt(a g / (a g + 1)))``,
    ``a = 3 log2 Mq / (Mq^2 - 1)``."""
    _check_order(mq)
    g = db_to_linear(ebn0_db)
    k = np.log2(mq)
    a = 3.0 * k / (mq**2 - 1)
    return (mq - 1) / (mq * k) * (1.0 - np.sqrt(a * g / (a * g + 1.0)))


def ber_qpsk_awgn(ebn0_db):
    """Exact Gray-coded QPSK bit error rate on AWGN, ``Q(sqrt(2 Eb/N0))``."""
    return q_function(np.sqrt(2.0 * db_to_linear(ebn0_db)))


def ber_qpsk_rayleigh(ebn0_db):
    """Exact Gray-coded QPSK bit error rate on flat Rayleigh fading with perfect CSI."""
    g = db_to_linear(ebn0_db)
    return 0.5 * (1.0 - np.sqrt(g / (1.0 + g)))


def draw_payloads(n_subcarriers, trials, seed, start=0):
    """QPSK payloads for trials ``start .. start + trials - 1``; returns ``(symbols, bits)``."""
    infos = [
        random_info_spectrum(n_subcarriers, rngmod.stream(seed, rngmod.BITS, t))
        for t in range(start, start + trials)
    ]
    return np.stack([i.symbols for i in infos]), np.stack([i.bits for i in infos])


def channel_gain(channel, seed, trial):
    if channel == "awgn":
        return 1.0 + 0j
    if channel == "rayleigh":
        return complex(rngmod.complex_normal(rngmod.stream(seed, rngmod.CHANNEL, trial), 1)[0])
    raise ConfigError(f"unknown channel {channel!r}; expected one of {CHANNELS}")


def ber_montecarlo(
    designer, channel, ebn0_grid, trials, seed, n_subcarriers=1024, batch_size=64
):
    """Monte Carlo bit error rate of ``designer`` over a flat channel.

    Each trial is one OFDM symbol: draw bits, modulate, design the transmit
    spectrum, pass it through ``h x + w``, equalize with the known ``h`` and
    take hard QPSK decisions on ``designer.receive`` of the equalized
    spectrum (the baseline receiver strips its known radar term). Payloads,
    channel gains and noise are drawn
    from streams keyed by trial (and grid index for noise), so different
    designers see identical randomness and each design is reused across the
    whole E_b/N_0 grid.

    Parameters
    ----------
    designer : estimator with ``fit``/``transform`` (see :mod:`plpoi.estimators`)
    channel : {"awgn", "rayleigh"}
    ebn0_grid : sequence of float, dB
    trials : int
    seed : int

    Returns
    -------
    list of BerPoint, one per grid value
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if channel not in CHANNELS:
        raise ConfigError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    grid = [float(e) for e in np.atleast_1d(ebn0_grid)]
    errors = np.zeros(len(grid), dtype=np.int64)
    fitted = False
    for start in range(0, trials, batch_size):
        count = min(batch_size, trials - start)
        C, bits = draw_payloads(n_subcarriers, count, seed, start)
        if not fitted:
            designer.fit(C)
            fitted = True
        X = designer.transform(C)
        for j in range(count):
            t = start + j
            h = channel_gain(channel, seed, t)
            for i, ebn0 in enumerate(grid):
                sample = ChannelSample(h=h, noise_var=float(noise_variance(ebn0)))
                y = apply_channel(X[j], sample, rngmod.stream(seed, rngmod.NOISE, t, i))
                r = designer.receive(equalize(y, h))
                errors[i] += np.count_nonzero(demodulate_qpsk(r) != bits[j])
    n_bits = 2 * n_subcarriers * trials
    return [
        BerPoint(ebn0_db=e, ber=float(errors[i]) / n_bits, trials=trials, errors=int(errors[i]), bits=n_bits)
        for i, e in enumerate(grid)
    ]


def ber_rows_to_csv(rows, fh=None):
    """``rows`` are ``(method, channel, BerPoint)`` tuples."""
    out = fh if fh is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BER_COLUMNS)
    for method, channel, p in rows:
        writer.writerow(
            [method, channel, format(p.ebn0_db, ".17g"), p.trials, p.errors, format(p.ber, ".17g")]
        )
    return out.getvalue() if fh is None else None
