"""ADMM solver for PD-constrained low-PAPR OFDM spectra.

Given a QPSK payload ``c`` the solver looks for ``x`` and ``s`` with

    A x = s,  PAPR(s) <= alpha,  |wrap(arg x_n - arg c_n)| <= theta,  |x_n| = 1

by alternating three steps on the augmented Lagrangian
``Re{y^H (A x - s)} + rho/2 ||A x - s||^2``:

1. x-step: relaxed minimizer ``(1/M) A^H (s - y/rho)`` projected onto the
   phase arcs around ``c`` (:func:`x_update`).
2. s-step: projection of ``q = A x + y/rho`` onto the PAPR cone, written as
   ``s = beta v`` with ``||v|| = 1`` and ``|v_m| <= sqrt(alpha/M)``; the
   water-filling level ``gamma`` is found by bisection (:func:`v_update`,
   :func:`s_update`).
3. dual ascent ``y += rho (A x - s)`` (:func:`dual_update`).
"""

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_theta, check_vector
from .exceptions import ConfigError, DegenerateWarning, DomainError
from .spectral import TransformPlan, analyze_freq, db_to_linear, papr_db, synthesize_time
from .waveform import DesignedSpectrum, pd_project, phase_difference

TRACE_COLUMNS = ("iter", "papr_db", "primal_residual", "pd_violation", "beta", "split_papr_db")


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters. ``alpha`` is the linear PAPR cap (1.8 dB by default)."""

    theta: float = 0.6
    alpha: float = float(db_to_linear(1.8))
    rho: float = 1e4
    max_iters: int = 150
    residual_tol: float = 1e-6
    bisect_tol: float = 1e-10
    bisect_gamma_hi: float | None = None
    max_bisect_iters: int = 200
    oversampling: int = 4

    def __post_init__(self):
        check_theta(self.theta)
        check_positive(self.rho, "rho")
        check_positive(self.residual_tol, "residual_tol")
        check_positive(self.bisect_tol, "bisect_tol")
        if not np.isfinite(self.alpha) or self.alpha < 1.0:
            raise ConfigError(f"alpha must be >= 1 (linear), got {self.alpha}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.bisect_gamma_hi is not None:
            check_positive(self.bisect_gamma_hi, "bisect_gamma_hi")

    @classmethod
    def from_db(cls, alpha_db=1.8, **kwargs):
        return cls(alpha=float(db_to_linear(alpha_db)), **kwargs)

    @property
    def alpha_db(self):
        return 10.0 * np.log10(self.alpha)


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    papr_db: float  # PAPR of A x, the waveform actually transmitted
    primal_residual: float
    pd_violation: float
    beta: float
    split_papr_db: float  # PAPR of the split variable s (nan when beta == 0)


@dataclass
class SolverState:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    k: int = 0
    trace: list = field(default_factory=list)

    @classmethod
    def initial(cls, c, plan):
        """``x = c``, ``s = A c``, ``y = 0``."""
        c = np.asarray(c, dtype=complex)
        return cls(x=c.copy(), s=synthesize_time(c, plan), y=np.zeros(plan.m, dtype=complex))


@dataclass
class SolveResult:
    """Output of :func:`solve`.

    ``waveform`` is ``A x`` for the final (feasible) ``x``, not the split
    variable. ``converged`` is True when the relative primal residual dropped
    below ``residual_tol``; ``beta_zero`` flags a zero split scale at exit.
    """

    spectrum: DesignedSpectrum
    waveform: np.ndarray
    trace: list
    converged: bool
    beta_zero: bool
    state: SolverState

    @property
    def x(self):
        return self.spectrum.values

    @property
    def n_iter(self):
        return len(self.trace)

    @property
    def papr_db(self):
        return papr_db(self.waveform)


def relaxed_minimizer(s, y, rho, plan):
    """``(1/M) A^H (s - y / rho)``, the unconstrained x-step minimizer."""
    return analyze_freq(s - y / rho, plan)


def x_update(s, y, c, config, plan):
    return pd_project(relaxed_minimizer(s, y, config.rho, plan), c, config.theta)


def v_update(q, alpha, tol=1e-10, gamma_hi=None, max_iters=200):
    """Unit-norm ``v`` maximizing ``Re(v^H q)`` under ``|v_m| <= sqrt(alpha/M)``.

    ``v_m = q_m / (2 gamma)`` below the cap and ``sqrt(alpha/M) e^{j arg q_m}``
    at it; ``gamma`` is bisected on ``(0, gamma_hi)`` until
    ``| ||v||^2 - 1 | < tol``. The right end defaults to ``||q||``, where at
    most a quarter of the unit energy is reached.

    If fewer than ``M / alpha`` entries of ``q`` are nonzero the unit norm is
    out of reach; the zero entries are then raised to the cap (phase 0) in
    index order until it is met, and a :class:`DegenerateWarning` is issued.

    ``q`` may carry leading batch axes; each row along the last axis is an
    independent problem.

    Returns
    -------
    v : ndarray, complex, same shape as ``q``
    gamma : float or ndarray of shape ``q.shape[:-1]``
    """
    q = np.asarray(q, dtype=complex)
    if alpha < 1.0:
        raise ConfigError(f"alpha must be >= 1, got {alpha}")
    batch_shape = q.shape[:-1]
    q2 = q.reshape(-1, q.shape[-1])
    rows, m = q2.shape
    a2 = q2.real**2 + q2.imag**2
    norms = np.sqrt(a2.sum(axis=1))
    if np.any(norms == 0):
        raise DomainError("v_update needs a nonzero q")
    cap2 = alpha / m
    cap = np.sqrt(cap2)

    gamma = np.empty(rows)
    v = np.empty_like(q2)
    degenerate = np.count_nonzero(a2 > 0, axis=1) * cap2 < 1.0
    for r in np.flatnonzero(degenerate):
        v[r], gamma[r] = _degenerate_fill(q2[r], a2[r] > 0, cap, cap2)
    regular = np.flatnonzero(~degenerate)
    if regular.size:
        hi = norms[regular] if gamma_hi is None else np.full(regular.size, float(gamma_hi))
        # every nonzero entry sits at the cap for gamma below this, so f >= 0 there
        lo = np.sqrt(np.min(np.where(a2[regular] > 0, a2[regular], np.inf), axis=1) / cap2) / 2.0
        g = _bisect_gamma(a2[regular], cap2, np.minimum(lo, hi), hi, tol, max_iters)
        gamma[regular] = g
        v[regular] = _water_fill(q2[regular], a2[regular], g[:, None], cap, cap2)

    v = v.reshape(q.shape)
    if not batch_shape:
        return v, float(gamma[0])
    return v, gamma.reshape(batch_shape)


def _bisect_gamma(a2, cap2, lo, hi, tol, max_iters):
    """Bisection on ``f(gamma) = sum_m min(a2_m / (4 gamma^2), cap2) - 1`` per row.

    The midpoint is geometric while ``hi / lo > 4`` so that very wide
    brackets (entries of ``q`` spanning many decades) shrink quickly.
    Rows are sorted once; each evaluation then needs only a prefix-sum lookup.
    Offsetting row ``r``'s normalized keys into ``[r, r + 0.5]`` lets a single
    ``searchsorted`` serve every row.
    """
    rows, m = a2.shape
    a2_sorted = np.sort(a2, axis=1)
    prefix = np.zeros((rows, m + 1))
    np.cumsum(a2_sorted, axis=1, out=prefix[:, 1:])
    scale = a2_sorted[:, -1]
    offsets = np.arange(rows, dtype=float)
    keys = (offsets[:, None] + 0.5 * a2_sorted / scale[:, None]).ravel()
    row_start = np.arange(rows) * m

    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    gamma = 0.5 * (lo + hi)
    active = np.ones(rows, dtype=bool)
    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        l, h = lo[idx], hi[idx]
        g = np.where(h > 4.0 * l, np.sqrt(l * h), 0.5 * (l + h))
        gamma[idx] = g
        t = 1.0 / (4.0 * g * g)
        # uncapped entries satisfy a2 * t < cap2
        thr = np.minimum(cap2 / t / scale[idx], 1.5)
        k = np.searchsorted(keys, offsets[idx] + 0.5 * thr, side="left") - row_start[idx]
        f = prefix[idx, k] * t + (m - k) * cap2 - 1.0
        done = np.abs(f) < tol
        up = ~done & (f > 0)
        down = ~done & (f <= 0)
        lo[idx[up]] = g[up]
        hi[idx[down]] = g[down]
        active[idx[done]] = False
    return gamma


def _water_fill(q, a2, gamma, cap, cap2):
    # q_m / (2 gamma) below the cap, cap * e^{j arg q_m} otherwise, i.e. a magnitude clip
    a = np.sqrt(a2)
    scale = np.minimum(1.0 / (2.0 * gamma), cap / np.where(a > 0, a, 1.0))
    return q * scale


def _degenerate_fill(q, nonzero, cap, cap2):
    warnings.warn(
        "q has too few nonzero entries to reach unit norm under the PAPR cap; "
        "filling zero entries at the cap",
        DegenerateWarning,
        stacklevel=4,
    )
    v = np.zeros_like(q)
    v[nonzero] = cap * q[nonzero] / np.abs(q[nonzero])
    remaining = 1.0 - np.count_nonzero(nonzero) * cap2
    for idx in np.flatnonzero(~nonzero):
        if remaining <= 0:
            break
        fill = min(cap2, remaining)
        v[idx] = np.sqrt(fill)
        remaining -= fill
    gamma = float(np.min(np.abs(q[nonzero]))) / (2.0 * cap) if nonzero.any() else 0.0
    return v, gamma


def s_update(ax, y, config):
    """Project ``q = A x + y/rho`` onto the PAPR cone as ``s = beta v``.

    Returns
    -------
    s : ndarray, complex, same shape as ``ax``
    beta : float or ndarray
        ``max(Re(v^H q), 0)`` per row; ``s`` is zero where it vanishes.
    """
    q = ax + y / config.rho
    v, _ = v_update(
        q,
        config.alpha,
        tol=config.bisect_tol,
        gamma_hi=config.bisect_gamma_hi,
        max_iters=config.max_bisect_iters,
    )
    beta = np.maximum(np.sum(v.conj() * q, axis=-1).real, 0.0)
    s = beta[..., None] * v
    if np.ndim(beta) == 0:
        return s, float(beta)
    return s, beta


def dual_update(y, ax, s, rho):
    return y + rho * (ax - s)


def solve(c, config=None, state=None):
    """Run the ADMM iterations for payload ``c``.

    Stops after ``config.max_iters`` iterations or once
    ``||A x - s|| / ||s|| <= config.residual_tol``. The initial state is
    ``x = c, s = A c, y = 0`` unless ``state`` is given.

    Returns
    -------
    SolveResult
    """
    c = check_vector(c, "c")
    if state is not None:
        state = SolverState(
            x=state.x[None, :], s=state.s[None, :], y=state.y[None, :], k=state.k, trace=state.trace
        )
    return solve_batch(c[None, :], config, state=state)[0]


def solve_batch(C, config=None, state=None, record_trace=True):
    """Solve one independent problem per row of ``C``; returns a list of :class:`SolveResult`.

    Rows stop individually when their residual test passes, so each result
    is the same as running :func:`solve` on that row alone.
    """
    config = config or SolverConfig()
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2:
        raise ConfigError(f"solve_batch expects a 2-D array, got shape {C.shape}")
    rows = C.shape[0]
    plan = TransformPlan(C.shape[1], config.oversampling)
    if state is None:
        X = C.copy()
        S = synthesize_time(C, plan)
        Y = np.zeros_like(S)
        k0, traces = 0, [[] for _ in range(rows)]
    else:
        X, S, Y = state.x.copy(), state.s.copy(), state.y.copy()
        k0, traces = state.k, [list(state.trace)]
    beta = np.linalg.norm(S, axis=1)
    converged = np.zeros(rows, dtype=bool)
    n_iter = np.zeros(rows, dtype=int)
    active = np.arange(rows)

    for it in range(config.max_iters):
        if active.size == 0:
            break
        s_a, y_a, c_a = S[active], Y[active], C[active]
        x_a = x_update(s_a, y_a, c_a, config, plan)
        ax = synthesize_time(x_a, plan)
        s_a, beta_a = s_update(ax, y_a, config)
        y_a = dual_update(y_a, ax, s_a, config.rho)
        X[active], S[active], Y[active] = x_a, s_a, y_a
        beta[active] = beta_a
        n_iter[active] += 1

        residual = np.linalg.norm(ax - s_a, axis=1)
        s_norm = np.linalg.norm(s_a, axis=1)
        if record_trace:
            papr_ax = papr_db(ax)
            pos = beta_a > 0
            papr_s = np.full(active.size, np.nan)
            if pos.any():
                papr_s[pos] = papr_db(s_a[pos])
            viol = np.max(np.abs(phase_difference(x_a, c_a)), axis=1) - config.theta
            for j, r in enumerate(active):
                traces[r].append(
                    TraceRecord(
                        iter=k0 + it + 1,
                        papr_db=float(papr_ax[j]),
                        primal_residual=float(residual[j]),
                        pd_violation=float(viol[j]),
                        beta=float(beta_a[j]),
                        split_papr_db=float(papr_s[j]),
                    )
                )
        done = (s_norm > 0) & (residual <= config.residual_tol * s_norm)
        converged[active[done]] = True
        active = active[~done]

    if np.any(beta == 0):
        warnings.warn("split scale beta is zero at termination", DegenerateWarning, stacklevel=2)
    waveforms = synthesize_time(X, plan)
    results = []
    for r in range(rows):
        st = SolverState(x=X[r], s=S[r], y=Y[r], k=k0 + int(n_iter[r]), trace=traces[r])
        results.append(
            SolveResult(
                spectrum=DesignedSpectrum(values=X[r], reference=C[r], theta=config.theta),
                waveform=waveforms[r],
                trace=traces[r],
                converged=bool(converged[r]),
                beta_zero=bool(beta[r] == 0),
                state=st,
            )
        )
    return results


def trace_to_csv(trace, fh=None):
    """Write a trace as CSV (17 significant digits); returns the text if ``fh`` is None."""
    out = fh if fh is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in trace:
        writer.writerow(
            [rec.iter] + [format(getattr(rec, col), ".17g") for col in TRACE_COLUMNS[1:]]
        )
    if fh is None:
        return out.getvalue()
    return None
