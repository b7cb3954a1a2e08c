"""Radar-side evaluation: periodic ambiguity function, matched-filter range profiles,
multi-target echoes and range-Doppler maps.

Sensing runs at the critical rate: fast-time samples are spaced ``1/B``, so
one symbol is ``N`` samples, a delay bin is ``c / (2B)`` metres and the
transmitted symbol is ``synthesize_time(x, TransformPlan(N, 1))``. Delays are
circular within a symbol (the cyclic prefix covers every target inside the
unambiguous range).
"""

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.ndimage import maximum_filter, minimum_filter

from . import rng as rngmod
from .exceptions import ConfigError, DegenerateWarning, DimensionError, DomainError
from .spectral import TransformPlan, synthesize_time

SPEED_OF_LIGHT = constants.c
MAP_COLUMNS = ("delay_bin", "doppler_bin", "range_m", "velocity_mps", "magnitude_db")


@dataclass(frozen=True)
class RadarParams:
    """OFDM radar parameters; defaults follow the 24 GHz, 1024-subcarrier setup."""

    fc: float = 24e9
    bandwidth: float = 93.1e6
    n_subcarriers: int = 1024
    symbol_duration: float = 11e-6
    cp_duration: float = 1.37e-6
    frame_symbols: int = 256

    @property
    def subcarrier_spacing(self):
        return self.bandwidth / self.n_subcarriers

    @property
    def total_symbol(self):
        return self.symbol_duration + self.cp_duration

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.fc

    @property
    def sample_rate(self):
        return self.bandwidth

    @property
    def range_resolution(self):
        return SPEED_OF_LIGHT / (2.0 * self.bandwidth)

    @property
    def max_range(self):
        return SPEED_OF_LIGHT * self.cp_duration / 2.0

    @property
    def velocity_resolution(self):
        return self.wavelength / (2.0 * self.frame_symbols * self.total_symbol)

    @property
    def max_velocity(self):
        # Doppler kept below a tenth of the subcarrier spacing
        return self.wavelength * self.subcarrier_spacing / 10.0


@dataclass(frozen=True)
class TargetSpec:
    range_m: float
    velocity_mps: float
    amplitude: complex = 1.0


@dataclass
class RangeDopplerMap:
    """Magnitudes on a (delay bin x Doppler bin) grid with physical axes."""

    grid: np.ndarray
    range_axis: np.ndarray
    velocity_axis: np.ndarray
    params: RadarParams = field(default_factory=RadarParams)

    @property
    def shape(self):
        return self.grid.shape


@dataclass(frozen=True)
class Detection:
    range_m: float
    velocity_mps: float
    magnitude: float
    delay_bin: int
    doppler_bin: int


def ambiguity(s, delays=None, doppler_bins=None, chunk_elems=1 << 22):
    """Periodic ambiguity function ``AF(tau, f) = sum_m s(m) s*(m + tau) e^{j 2 pi f m / M}``.

    Indices wrap modulo ``M``. Rows follow ``delays`` and columns follow
    ``doppler_bins`` (both default to ``0 .. M-1``). One FFT per delay.
    """
    s = np.asarray(s, dtype=complex)
    m = s.size
    delays = np.arange(m) if delays is None else np.asarray(delays, dtype=int)
    doppler = np.arange(m) if doppler_bins is None else np.asarray(doppler_bins, dtype=int)
    if np.any((delays < 0) | (delays >= m)) or np.any((doppler < 0) | (doppler >= m)):
        raise DimensionError("delays and Doppler bins must lie in [0, M)")
    out = np.empty((delays.size, doppler.size), dtype=complex)
    idx = np.arange(m)
    step = max(1, chunk_elems // m)
    for start in range(0, delays.size, step):
        tau = delays[start : start + step]
        shifted = s[(idx[None, :] + tau[:, None]) % m]
        products = s[None, :] * shifted.conj()
        # sum_m p(m) e^{+j 2 pi f m / M} is M * ifft
        out[start : start + tau.size] = (np.fft.ifft(products, axis=1) * m)[:, doppler]
    return out


def zero_cut_psl(af_grid, axis=0, zero_index=0):
    """Peak sidelobe level (dB) of a zero cut through an ambiguity grid.

    ``axis=0`` takes the zero-Doppler cut along delay (column ``zero_index``),
    ``axis=1`` the zero-delay cut along Doppler (row ``zero_index``). The
    mainlobe is the single largest bin; the result is
    ``20 log10(max sidelobe / mainlobe)`` and ``-inf`` if every sidelobe is
    exactly zero.
    """
    grid = np.abs(np.asarray(af_grid))
    if grid.ndim == 1:
        cut = grid
    elif axis == 0:
        cut = grid[:, zero_index]
    elif axis == 1:
        cut = grid[zero_index, :]
    else:
        raise ConfigError(f"axis must be 0 or 1, got {axis}")
    return psl_db(cut)


def psl_db(cut):
    cut = np.abs(np.asarray(cut, dtype=complex)).ravel()
    peak_idx = int(np.argmax(cut))
    peak = cut[peak_idx]
    if peak == 0:
        raise DomainError("PSL of an all-zero cut is undefined")
    side = np.delete(cut, peak_idx)
    side_max = side.max() if side.size else 0.0
    if side_max == 0:
        return float("-inf")
    return float(20.0 * np.log10(side_max / peak))


def periodic_autocorrelation(s):
    """Circular autocorrelation ``r(tau) = sum_m s(m) s*(m + tau)`` via FFT."""
    s = np.asarray(s, dtype=complex)
    spec = np.fft.fft(s)
    # sum_m s(m) s*(m+tau) = conj of the usual correlation at lag tau
    return np.fft.ifft(np.abs(spec) ** 2).conj()


def delay_bin(range_m, params):
    return int(round(2.0 * range_m * params.bandwidth / SPEED_OF_LIGHT))


def doppler_per_sample(velocity_mps, params):
    """Normalized Doppler (cycles per fast-time sample), ``2 v / (lambda f_s)``."""
    return 2.0 * velocity_mps / (params.wavelength * params.sample_rate)


def _check_target(t, params):
    if not 0.0 <= t.range_m < params.max_range:
        raise ConfigError(f"target range {t.range_m} m outside [0, {params.max_range:.2f}) m")
    if abs(t.velocity_mps) >= params.max_velocity:
        raise ConfigError(f"target velocity {t.velocity_mps} m/s beyond +/-{params.max_velocity:.1f} m/s")


def synth_echo(x, targets, params, noise_var, rng, symbol_index=0):
    """Echo of one transmitted symbol from point ``targets``.

    ``y(m) = sum_i b_i s((m - tau_i) mod N) e^{j 2 pi f_i m} e^{j phi_i} + o(m)``
    with ``tau_i`` the delay bin, ``f_i`` the per-sample Doppler and
    ``phi_i = 2 pi (2 v_i / lambda) symbol_index T_s`` the slow-time phase.
    ``o`` is complex Gaussian with variance ``noise_var``.
    """
    x = np.asarray(x, dtype=complex)
    n = x.size
    s = synthesize_time(x, TransformPlan(n, 1))
    y = np.zeros(n, dtype=complex)
    m = np.arange(n)
    for t in targets:
        _check_target(t, params)
        tau = delay_bin(t.range_m, params)
        fd = 2.0 * t.velocity_mps / params.wavelength
        phase = 2.0 * np.pi * (doppler_per_sample(t.velocity_mps, params) * m + fd * symbol_index * params.total_symbol)
        y += t.amplitude * np.roll(s, tau) * np.exp(1j * phase)
    if noise_var > 0:
        y += rngmod.complex_normal(rng, n, noise_var)
    return y


def _unit_spectrum(x):
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    if np.max(np.abs(mag - 1.0)) > 1e-9:
        warnings.warn("matched-filter spectrum is not unimodular; normalizing", DegenerateWarning, stacklevel=3)
        return np.where(mag > 0, x / np.where(mag > 0, mag, 1.0), 0.0)
    return x


def range_profile(y_echo, x, params=None):
    """Matched-filter range profile ``|IDFT(DFT(y) * conj(x))|`` (length N)."""
    y = np.asarray(y_echo, dtype=complex)
    x = _unit_spectrum(x)
    if y.size != x.size:
        raise DimensionError(f"echo length {y.size} != spectrum length {x.size}")
    return np.abs(np.fft.ifft(np.fft.fft(y) * x.conj()))


def range_doppler(frame_echoes, frame_spectra, params):
    """Range-Doppler map from ``G`` per-symbol echoes (rows) and their spectra.

    Per symbol the echo spectrum is multiplied by the conjugate transmit
    spectrum; a G-point DFT across symbols per subcarrier gives Doppler and an
    IDFT across subcarriers gives delay. Doppler bins follow FFT order
    (bin k > G/2 is negative velocity).
    """
    echoes = np.asarray(frame_echoes, dtype=complex)
    spectra = _unit_spectrum(frame_spectra)
    if echoes.shape != spectra.shape or echoes.ndim != 2:
        raise DimensionError(f"echo frame {echoes.shape} and spectra {spectra.shape} must match (G, N)")
    g, n = echoes.shape
    z = np.fft.fft(echoes, axis=1) * spectra.conj()
    z = np.fft.fft(z, axis=0)
    grid = np.abs(np.fft.ifft(z, axis=1)).T
    range_axis = np.arange(n) * params.range_resolution
    velocity_axis = np.fft.fftfreq(g, d=1.0 / g) * params.wavelength / (2.0 * g * params.total_symbol)
    return RangeDopplerMap(grid=grid, range_axis=range_axis, velocity_axis=velocity_axis, params=params)


def detect_peaks(rd_map, k):
    """The ``k`` strongest local maxima (8-neighbourhood, wrapping edges), strongest first.

    Plateaus are not maxima, so a flat map yields nothing. Fewer than ``k``
    results are returned with a warning when the map has fewer maxima.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    grid = rd_map.grid
    is_max = (grid == maximum_filter(grid, size=3, mode="wrap")) & (grid > minimum_filter(grid, size=3, mode="wrap"))
    rows, cols = np.nonzero(is_max)
    order = np.argsort(grid[rows, cols], kind="stable")[::-1][:k]
    found = [
        Detection(
            range_m=float(rd_map.range_axis[r]),
            velocity_mps=float(rd_map.velocity_axis[c]),
            magnitude=float(grid[r, c]),
            delay_bin=int(r),
            doppler_bin=int(c),
        )
        for r, c in zip(rows[order], cols[order])
    ]
    if len(found) < k:
        warnings.warn(f"only {len(found)} local maxima found, {k} requested", DegenerateWarning, stacklevel=2)
    return found


def simulate_frame(spectra, targets, params, snr_db, seed):
    """Echoes for a frame of designed spectra (rows) at per-target echo SNR ``snr_db``.

    SNR is the ratio of a unit-amplitude target's mean echo power per sample
    to the noise variance.
    """
    spectra = np.asarray(spectra, dtype=complex)
    g, n = spectra.shape
    signal_power = np.mean(np.abs(spectra) ** 2) * n
    noise_var = signal_power * 10.0 ** (-snr_db / 10.0)
    return np.stack(
        [
            synth_echo(spectra[i], targets, params, noise_var, rngmod.stream(seed, rngmod.ECHO, i), symbol_index=i)
            for i in range(g)
        ]
    )


def map_to_csv(rd_map, fh=None):
    """Long-form CSV of a range-Doppler map (magnitude in dB, 17 significant digits)."""
    out = fh if fh is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MAP_COLUMNS)
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(rd_map.grid)
    n, g = rd_map.grid.shape
    for i in range(n):
        for j in range(g):
            writer.writerow(
                [i, j, format(rd_map.range_axis[i], ".17g"), format(rd_map.velocity_axis[j], ".17g"),
                 format(mag_db[i, j], ".17g")]
            )
    return out.getvalue() if fh is None else None


def grid_bytes(grid, delta_r, delta_v):
    """Raw little-endian float64 grid (row-major) after a one-line text header."""
    grid = np.ascontiguousarray(grid, dtype="<f8")
    n, g = grid.shape
    header = f"n={n} g={g} delta_r={float(delta_r)!r} delta_v={float(delta_v)!r}\n"
    return header.encode("ascii") + grid.tobytes()


def write_grid(path, grid, delta_r, delta_v):
    with open(path, "wb") as fh:
        fh.write(grid_bytes(grid, delta_r, delta_v))


def read_grid(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        meta = dict(item.split("=", 1) for item in header)
        n, g = int(meta["n"]), int(meta["g"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(n, g), float(meta["delta_r"]), float(meta["delta_v"])
