"""Seeded experiment drivers: design, CCDF, parameter sweep, BER, ambiguity and detection.

Every driver takes an :class:`ExperimentConfig` (INI text, one section per
subcommand plus shared ``[solver]`` and ``[radar]`` sections) and an output
directory. CSV outputs start with ``#`` comment lines echoing the full
config, seed and RNG algorithm, so each file can be regenerated from its own
header. A ``manifest.json`` lists every output with its git-style blob hash
and the wall time of the run.
"""

import configparser
import csv
import hashlib
import io
import json
import logging
import os
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .admm import TRACE_COLUMNS, SolverConfig, solve
from .comm import (
    CHANNELS,
    ber_montecarlo,
    ber_qpsk_awgn,
    ber_qpsk_rayleigh,
    ber_theory_awgn,
    ber_theory_rayleigh,
    draw_payloads,
)
from .estimators import make_designer
from .exceptions import ConfigError
from .sensing import (
    RadarParams,
    TargetSpec,
    ambiguity,
    detect_peaks,
    grid_bytes,
    psl_db,
    range_doppler,
    simulate_frame,
)
from .spectral import TransformPlan, papr_db, synthesize_time
from .waveform import info_from_phases, random_info_spectrum

log = logging.getLogger(__name__)

DEFAULTS = {
    "run": {"seed": "0"},
    "solver": {
        "theta": "0.6",
        "alpha_db": "1.8",
        "rho": "10000",
        "max_iters": "150",
        "residual_tol": "1e-6",
        "oversampling": "4",
    },
    "radar": {
        "fc": "24e9",
        "bandwidth": "93.1e6",
        "n_subcarriers": "1024",
        "symbol_duration": "11e-6",
        "cp_duration": "1.37e-6",
        "frame_symbols": "256",
    },
    "design": {"n_subcarriers": "1024", "phases": ""},
    "ccdf": {
        "methods": "plain, baseline, plpoi",
        "trials": "1000",
        "n_subcarriers": "1024",
        "w": "0.65",
        "step_db": "0.1",
    },
    "sweep": {
        "theta_grid": "0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7",
        "w_grid": "0, 0.1, 0.161, 0.2, 0.288, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1",
        "trials": "100",
        "n_subcarriers": "1024",
    },
    "ber": {
        "methods": "plain, plpoi, baseline",
        "channel": "awgn",
        "ebn0": "0, 2, 4, 6, 8, 10, 12",
        "trials": "100",
        "n_subcarriers": "1024",
        "w": "0.161",
    },
    "af": {"oversampling": "1"},
    "detect": {"targets": "30:10:1, 34:15:1", "snr_db": "10", "frame_max_iters": "50"},
}

SUBCOMMANDS = ("design", "ccdf", "ber", "af", "detect", "sweep")


class ExperimentConfig:
    """Typed view over an INI document layered on top of :data:`DEFAULTS`."""

    def __init__(self, text=None, overrides=None):
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_dict(DEFAULTS)
        if text:
            try:
                parser.read_string(text)
            except configparser.Error as exc:
                raise ConfigError(f"malformed config: {exc}") from exc
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown config section [{section}]")
            for key in parser[section]:
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
        for (section, key), value in (overrides or {}).items():
            if value is not None:
                parser[section][key] = str(value)
        self._parser = parser

    @classmethod
    def from_file(cls, path, overrides=None):
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(text, overrides)

    def get(self, section, key):
        return self._parser[section][key]

    def get_float(self, section, key):
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None

    def get_int(self, section, key):
        value = self.get_float(section, key)
        if value != int(value):
            raise ConfigError(f"[{section}] {key} must be an integer, got {value}")
        return int(value)

    def get_floats(self, section, key):
        raw = self.get(section, key).strip()
        if not raw:
            return []
        try:
            return [float(v) for v in raw.split(",")]
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number list") from None

    def get_list(self, section, key):
        return [v.strip() for v in self.get(section, key).split(",") if v.strip()]

    @property
    def seed(self):
        seed = self.get_int("run", "seed")
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
        return seed

    def solver_params(self):
        return {
            "theta": self.get_float("solver", "theta"),
            "alpha_db": self.get_float("solver", "alpha_db"),
            "rho": self.get_float("solver", "rho"),
            "max_iters": self.get_int("solver", "max_iters"),
            "residual_tol": self.get_float("solver", "residual_tol"),
            "oversampling": self.get_int("solver", "oversampling"),
        }

    def solver_config(self):
        return SolverConfig.from_db(**self.solver_params())

    def radar_params(self):
        r = "radar"
        params = RadarParams(
            fc=self.get_float(r, "fc"),
            bandwidth=self.get_float(r, "bandwidth"),
            n_subcarriers=self.get_int(r, "n_subcarriers"),
            symbol_duration=self.get_float(r, "symbol_duration"),
            cp_duration=self.get_float(r, "cp_duration"),
            frame_symbols=self.get_int(r, "frame_symbols"),
        )
        if min(params.fc, params.bandwidth, params.symbol_duration, params.cp_duration) <= 0:
            raise ConfigError("radar parameters must be positive")
        if params.n_subcarriers < 2 or params.frame_symbols < 1:
            raise ConfigError("radar needs n_subcarriers >= 2 and frame_symbols >= 1")
        return params

    def targets(self):
        out = []
        for item in self.get_list("detect", "targets"):
            parts = item.split(":")
            if len(parts) not in (2, 3):
                raise ConfigError(f"target {item!r} must be range:velocity[:amplitude]")
            try:
                amp = complex(parts[2]) if len(parts) == 3 else 1.0
                out.append(TargetSpec(float(parts[0]), float(parts[1]), amp))
            except ValueError:
                raise ConfigError(f"target {item!r} is not numeric") from None
        return out

    def as_dict(self):
        return {s: dict(self._parser[s]) for s in self._parser.sections()}

    def to_text(self):
        buf = io.StringIO()
        self._parser.write(buf)
        return buf.getvalue().strip() + "\n"


@dataclass
class CcdfCurve:
    """Empirical ``P(PAPR >= threshold)`` on a fixed dB grid, with the raw samples."""

    thresholds_db: np.ndarray
    probabilities: np.ndarray
    samples_db: np.ndarray

    def at(self, threshold_db):
        return float(np.mean(self.samples_db >= threshold_db))

    def standard_error(self, threshold_db):
        p = self.at(threshold_db)
        return float(np.sqrt(p * (1.0 - p) / self.samples_db.size))


@dataclass
class SweepTable:
    theta_grid: np.ndarray
    plpoi_mean_db: np.ndarray
    w_grid: np.ndarray
    baseline_mean_db: np.ndarray
    pairs: list  # (theta, w) with equal mean PAPR; w is nan when no crossing exists


@dataclass
class RunResult:
    files: dict
    summary: dict
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def git_blob_sha1(data):
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class _Writer:
    """Collects output files and writes them in one pass at the end of a run."""

    def __init__(self, config, subcommand):
        self.config = config
        self.subcommand = subcommand
        self.files = {}

    def header(self):
        lines = [f"subcommand = {self.subcommand}", f"rng = {rngmod.RNG_ALGORITHM}"]
        lines += self.config.to_text().splitlines()
        return "".join(f"# {line}\n" if line else "#\n" for line in lines)

    def table(self, name, columns, rows):
        buf = io.StringIO()
        buf.write(self.header())
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        self.files[name] = buf.getvalue().encode()

    def raw(self, name, data):
        self.files[name] = data

    def flush(self, out_dir, wall_time):
        os.makedirs(out_dir, exist_ok=True)
        paths = {}
        for name, data in self.files.items():
            path = os.path.join(out_dir, name)
            with open(path, "wb") as fh:
                fh.write(data)
            paths[name] = path
        manifest = {
            "subcommand": self.subcommand,
            "config": self.config.as_dict(),
            "rng": rngmod.RNG_ALGORITHM,
            "outputs": {n: {"sha1": git_blob_sha1(d), "bytes": len(d)} for n, d in sorted(self.files.items())},
            "wall_time_s": wall_time,
        }
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths["manifest.json"] = path
        return paths


def _summary_rows(summary):
    return [(k, v) for k, v in summary.items()]


def _payloads(n, trials, seed):
    return draw_payloads(n, trials, seed)[0]


def _designer(config, method, w=None):
    if method == "plpoi":
        return make_designer("plpoi", **config.solver_params())
    oversampling = config.get_int("solver", "oversampling")
    if method == "baseline":
        return make_designer("baseline", w=w, oversampling=oversampling)
    return make_designer(method, oversampling=oversampling)


def papr_samples(designer, C, batch_size=64):
    """Oversampled PAPR (dB) of each designed row of ``C``."""
    designer.fit(C[:1])
    out = []
    for start in range(0, C.shape[0], batch_size):
        out.append(papr_db(designer.waveforms(C[start : start + batch_size])))
    return np.concatenate(out)


def ccdf_from_samples(samples_db, step_db=0.1):
    samples_db = np.asarray(samples_db, dtype=float)
    lo = np.floor(samples_db.min() / step_db) * step_db
    hi = np.ceil(samples_db.max() / step_db) * step_db
    thresholds = np.round(np.arange(lo, hi + step_db / 2, step_db), 10)
    probs = np.mean(samples_db[None, :] >= thresholds[:, None], axis=1)
    return CcdfCurve(thresholds_db=thresholds, probabilities=probs, samples_db=samples_db)


def run_ccdf(method, params, trials, seed, n_subcarriers=1024, step_db=0.1):
    """PAPR CCDF of ``method`` ("plain", "plpoi" or "baseline") over ``trials`` random payloads.

    ``params`` are passed to :func:`plpoi.estimators.make_designer`.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    C = _payloads(n_subcarriers, trials, seed)
    samples = papr_samples(make_designer(method, **params), C)
    return ccdf_from_samples(samples, step_db)


def crossing_w(target_db, w_grid, mean_db):
    """Smallest ``w`` at which the piecewise-linear baseline curve reaches ``target_db``."""
    for i in range(len(w_grid) - 1):
        a, b = mean_db[i] - target_db, mean_db[i + 1] - target_db
        if a == 0:
            return float(w_grid[i])
        if a * b < 0:
            return float(w_grid[i] + (w_grid[i + 1] - w_grid[i]) * a / (a - b))
    if len(w_grid) and mean_db[-1] == target_db:
        return float(w_grid[-1])
    return float("nan")


def run_sweep(theta_grid, w_grid, trials, seed, n_subcarriers=1024, solver_params=None, oversampling=4):
    """Mean PAPR versus ``theta`` (PLPOI) and ``w`` (baseline) on shared payloads, plus matched pairs."""
    theta_grid = np.asarray(sorted(theta_grid), dtype=float)
    w_grid = np.asarray(sorted(w_grid), dtype=float)
    if theta_grid.size == 0 or w_grid.size == 0:
        raise ConfigError("sweep grids must be nonempty")
    C = _payloads(n_subcarriers, trials, seed)
    params = dict(solver_params or {})
    params["oversampling"] = oversampling
    plpoi_mean = np.array(
        [papr_samples(make_designer("plpoi", **{**params, "theta": t}), C).mean() for t in theta_grid]
    )
    baseline = make_designer("baseline", oversampling=oversampling).fit(C[:1])
    base_mean = []
    for w in w_grid:
        baseline.set_params(w=float(w))
        base_mean.append(papr_samples(baseline, C).mean())
    base_mean = np.array(base_mean)
    pairs = [(float(t), crossing_w(m, w_grid, base_mean)) for t, m in zip(theta_grid, plpoi_mean)]
    return SweepTable(theta_grid, plpoi_mean, w_grid, base_mean, pairs)


def run_design(config, out_dir):
    """Design one symbol; writes spectrum, waveform, trace and summary CSVs."""
    t0 = time.perf_counter()
    seed = config.seed
    solver_cfg = config.solver_config()
    phases = config.get_floats("design", "phases")
    if phases:
        c = info_from_phases(phases).symbols
    else:
        c = random_info_spectrum(config.get_int("design", "n_subcarriers"), rngmod.stream(seed, rngmod.BITS, 0)).symbols
    plan = TransformPlan(c.size, solver_cfg.oversampling)
    t_solve = time.perf_counter()
    result = solve(c, solver_cfg)
    solve_time = time.perf_counter() - t_solve
    x = result.x
    pd = result.spectrum.phase_differences
    summary = {
        "n_subcarriers": c.size,
        "input_papr_db": papr_db(synthesize_time(c, plan)),
        "output_papr_db": result.papr_db,
        "max_pd": float(np.max(np.abs(pd))),
        "theta": solver_cfg.theta,
        "iterations": result.n_iter,
        "converged": result.converged,
        "max_modulus_error": float(np.max(np.abs(np.abs(x) - 1.0))),
    }
    violations = []
    if summary["max_pd"] > solver_cfg.theta + 1e-9:
        violations.append(f"phase difference {summary['max_pd']} exceeds theta {solver_cfg.theta}")
    if summary["max_modulus_error"] > 1e-9:
        violations.append("designed spectrum is not unimodular")
    log.info("design: %d iterations, %.3g s per iteration", result.n_iter, solve_time / max(result.n_iter, 1))

    w = _Writer(config, "design")
    w.table("spectrum.csv", ("n", "re", "im", "pd", "c_re", "c_im"),
            [(i, x[i].real, x[i].imag, pd[i], c[i].real, c[i].imag) for i in range(c.size)])
    s = result.waveform
    w.table("waveform.csv", ("m", "re", "im"), [(i, s[i].real, s[i].imag) for i in range(s.size)])
    w.table("trace.csv", TRACE_COLUMNS,
            [[r.iter] + [getattr(r, col) for col in TRACE_COLUMNS[1:]] for r in result.trace])
    w.table("summary.csv", ("key", "value"), _summary_rows(summary))
    summary["seconds_per_iter"] = solve_time / max(result.n_iter, 1)
    files = w.flush(out_dir, time.perf_counter() - t0)
    return RunResult(files, summary, violations)


def _ccdf_params(config, method):
    oversampling = config.get_int("solver", "oversampling")
    if method == "plpoi":
        return config.solver_params()
    if method == "baseline":
        return {"w": config.get_float("ccdf", "w"), "oversampling": oversampling}
    if method == "plain":
        return {"oversampling": oversampling}
    raise ConfigError(f"unknown method {method!r}")


def run_ccdf_config(config, out_dir):
    t0 = time.perf_counter()
    methods = config.get_list("ccdf", "methods")
    trials = config.get_int("ccdf", "trials")
    n = config.get_int("ccdf", "n_subcarriers")
    step = config.get_float("ccdf", "step_db")
    if step <= 0:
        raise ConfigError("step_db must be positive")
    w = _Writer(config, "ccdf")
    rows, summary = [], {}
    for method in methods:
        curve = run_ccdf(method, _ccdf_params(config, method), trials, config.seed, n, step)
        rows += [(method, t, p) for t, p in zip(curve.thresholds_db, curve.probabilities)]
        summary[f"{method}_max_papr_db"] = float(curve.samples_db.max())
        summary[f"{method}_mean_papr_db"] = float(curve.samples_db.mean())
    w.table("ccdf.csv", ("method", "threshold_db", "probability"), rows)
    w.table("summary.csv", ("key", "value"), _summary_rows(summary))
    return RunResult(w.flush(out_dir, time.perf_counter() - t0), summary)


def run_sweep_config(config, out_dir):
    t0 = time.perf_counter()
    table = run_sweep(
        config.get_floats("sweep", "theta_grid"),
        config.get_floats("sweep", "w_grid"),
        config.get_int("sweep", "trials"),
        config.seed,
        config.get_int("sweep", "n_subcarriers"),
        solver_params={k: v for k, v in config.solver_params().items() if k not in ("theta", "oversampling")},
        oversampling=config.get_int("solver", "oversampling"),
    )
    w = _Writer(config, "sweep")
    rows = [("plpoi", "theta", t, m) for t, m in zip(table.theta_grid, table.plpoi_mean_db)]
    rows += [("baseline", "w", v, m) for v, m in zip(table.w_grid, table.baseline_mean_db)]
    w.table("sweep.csv", ("method", "parameter", "value", "mean_papr_db"), rows)
    w.table("pairs.csv", ("theta", "w"), table.pairs)
    summary = {f"w_at_theta_{t:g}": v for t, v in table.pairs}
    return RunResult(w.flush(out_dir, time.perf_counter() - t0), summary)


def _theory(channel, ebn0):
    if channel == "awgn":
        return float(ber_theory_awgn(ebn0)), float(ber_qpsk_awgn(ebn0))
    return float(ber_theory_rayleigh(ebn0)), float(ber_qpsk_rayleigh(ebn0))


def run_ber(config, out_dir):
    """Monte Carlo BER per method with the closed-form curves alongside.

    An ``ebn0`` entry of ``inf`` runs the noiseless case. Rows whose BER rises
    with E_b/N_0 are flagged in the ``flag`` column and logged, not failed.
    """
    t0 = time.perf_counter()
    channel = config.get("ber", "channel").strip()
    if channel not in CHANNELS:
        raise ConfigError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    grid = config.get_floats("ber", "ebn0")
    if not grid:
        raise ConfigError("ebn0 grid is empty")
    trials = config.get_int("ber", "trials")
    n = config.get_int("ber", "n_subcarriers")
    methods = config.get_list("ber", "methods")
    rows, summary = [], {}
    for method in methods:
        designer = _designer(config, method, w=config.get_float("ber", "w"))
        points = ber_montecarlo(designer, channel, grid, trials, config.seed, n_subcarriers=n)
        prev = None
        for p in points:
            theory, exact = _theory(channel, p.ebn0_db)
            flag = ""
            if prev is not None and p.ebn0_db > prev.ebn0_db and p.ber > prev.ber:
                flag = "nonmonotone"
                log.warning("BER rises from %g to %g dB for %s", prev.ebn0_db, p.ebn0_db, method)
            rows.append((method, channel, p.ebn0_db, p.trials, p.bits, p.errors, p.ber, theory, exact, flag))
            summary[f"{method}_ber_at_{p.ebn0_db:g}dB"] = p.ber
            prev = p
    w = _Writer(config, "ber")
    w.table(
        "ber.csv",
        ("method", "channel", "ebn0_db", "trials", "bits", "bit_errors", "ber", "ber_theory", "ber_qpsk_exact", "flag"),
        rows,
    )
    return RunResult(w.flush(out_dir, time.perf_counter() - t0), summary)


def run_af(config, out_dir):
    """Periodic ambiguity function of one designed waveform.

    The waveform is resampled at ``[af] oversampling`` (1 = critical rate,
    where a unimodular spectrum gives an exact delta along zero Doppler).
    Writes both zero cuts, the full magnitude grid (binary) and PSL summary.
    """
    t0 = time.perf_counter()
    solver_cfg = config.solver_config()
    n = config.get_int("design", "n_subcarriers")
    c = random_info_spectrum(n, rngmod.stream(config.seed, rngmod.BITS, 0)).symbols
    x = solve(c, solver_cfg).x
    l_af = config.get_int("af", "oversampling")
    s = synthesize_time(x, TransformPlan(n, l_af))
    af = np.abs(ambiguity(s))
    peak = af[0, 0]
    with np.errstate(divide="ignore"):
        range_cut = 20 * np.log10(af[:, 0] / peak)
        doppler_cut = 20 * np.log10(af[0, :] / peak)
    summary = {
        "range_cut_psl_db": psl_db(af[:, 0]),
        "doppler_cut_psl_db": psl_db(af[0, :]),
        "samples": s.size,
    }
    violations = []
    if l_af == 1 and summary["range_cut_psl_db"] > -200:
        violations.append(f"zero-Doppler PSL {summary['range_cut_psl_db']:.1f} dB above -200 dB")
    w = _Writer(config, "af")
    w.table("af_cuts.csv", ("bin", "range_cut_db", "doppler_cut_db"),
            [(i, range_cut[i], doppler_cut[i]) for i in range(s.size)])
    w.table("summary.csv", ("key", "value"), _summary_rows(summary))
    w.raw("af_grid.bin", grid_bytes(af, 1.0, 1.0))
    return RunResult(w.flush(out_dir, time.perf_counter() - t0), summary, violations)


def design_frame(config, seed, max_iters=None):
    """``G`` designed spectra (one per OFDM symbol) from the frame's payload stream."""
    params = config.radar_params()
    solver = config.solver_params()
    if max_iters is not None:
        solver["max_iters"] = max_iters
    C = _payloads(params.n_subcarriers, params.frame_symbols, seed)
    designer = make_designer("plpoi", **solver)
    return designer.fit(C).transform(C)


def run_detect(config, out_dir):
    """Multi-target range-Doppler detection on a frame of designed symbols."""
    t0 = time.perf_counter()
    params = config.radar_params()
    targets = config.targets()
    if not targets:
        raise ConfigError("[detect] targets is empty")
    snr_db = config.get_float("detect", "snr_db")
    X = design_frame(config, config.seed, config.get_int("detect", "frame_max_iters"))
    echoes = simulate_frame(X, targets, params, snr_db, config.seed)
    rd = range_doppler(echoes, X, params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        found = detect_peaks(rd, len(targets))
    median = float(np.median(rd.grid))
    summary = {"map_median": median, "detections": len(found)}
    for i, d in enumerate(found):
        summary[f"det{i}_range_m"] = d.range_m
        summary[f"det{i}_velocity_mps"] = d.velocity_mps
        summary[f"det{i}_above_median_db"] = 20 * np.log10(d.magnitude / median)
    violations = [str(c.message) for c in caught]
    w = _Writer(config, "detect")
    w.table(
        "detections.csv",
        ("range_m", "velocity_mps", "magnitude", "delay_bin", "doppler_bin"),
        [(d.range_m, d.velocity_mps, d.magnitude, d.delay_bin, d.doppler_bin) for d in found],
    )
    with np.errstate(divide="ignore"):
        range_cut = 20 * np.log10(rd.grid[:, 0])
        vel_cut = 20 * np.log10(rd.grid[0, :])
    w.table("range_profile_v0.csv", ("delay_bin", "range_m", "magnitude_db"),
            [(i, rd.range_axis[i], range_cut[i]) for i in range(rd.grid.shape[0])])
    w.table("velocity_profile_r0.csv", ("doppler_bin", "velocity_mps", "magnitude_db"),
            [(j, rd.velocity_axis[j], vel_cut[j]) for j in range(rd.grid.shape[1])])
    w.table("summary.csv", ("key", "value"), _summary_rows(summary))
    w.raw("rd_map.bin", grid_bytes(rd.grid, params.range_resolution, params.velocity_resolution))
    return RunResult(w.flush(out_dir, time.perf_counter() - t0), summary, violations)


RUNNERS = {
    "design": run_design,
    "ccdf": run_ccdf_config,
    "sweep": run_sweep_config,
    "ber": run_ber,
    "af": run_af,
    "detect": run_detect,
}
