"""scikit-learn style waveform designers.

Each designer maps a batch of QPSK spectra ``X`` (one OFDM symbol per row,
shape ``(n_symbols, n_subcarriers)``) to transmit spectra of the same shape,
so they plug into ``Pipeline``/``clone``/``get_params`` like any transformer::

    designer = PLPOIDesigner(theta=0.6).fit(X)
    spectra = designer.transform(X)
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_fitted, check_spectra, check_theta, check_unimodular
from .admm import SolverConfig, solve_batch
from .exceptions import ConfigError
from .spectral import TransformPlan, synthesize_time
from .waveform import BaselineWeights, baseline_design, nearest_qpsk, radar_reference


class _DesignerMixin(TransformerMixin):
    def _validate_fit(self, X):
        X = check_spectra(X)
        check_unimodular(X, "X")
        self.n_features_in_ = X.shape[1]
        self.plan_ = TransformPlan(X.shape[1], self.oversampling)
        return X

    def _validate_transform(self, X):
        check_fitted(self, ["n_features_in_"])
        X = check_spectra(X, n_features=self.n_features_in_)
        check_unimodular(X, "X")
        return X

    def waveforms(self, X):
        """Oversampled time-domain waveforms ``A x`` of the designed spectra."""
        return synthesize_time(self.transform(X), self.plan_)

    def inverse_transform(self, X):
        """Nearest QPSK payload for each designed subcarrier (hard decision)."""
        return nearest_qpsk(self.receive(X))

    def receive(self, Y):
        """Map equalized received spectra to payload-domain soft estimates."""
        return check_spectra(Y)


class PLPOIDesigner(_DesignerMixin, BaseEstimator):
    """Phase-difference constrained low-PAPR designer (ADMM).

    Parameters
    ----------
    theta : float
        PD threshold in radians, ``0 < theta < pi/4``.
    alpha_db : float
        PAPR cap for the split variable, in dB.
    rho : float
        ADMM penalty.
    max_iters : int
    residual_tol : float
        Early exit on relative primal residual.
    bisect_tol : float
    oversampling : int

    Attributes
    ----------
    n_features_in_ : int
    plan_ : TransformPlan
    results_ : list of SolveResult
        Per-row solver output of the most recent :meth:`transform` call.
    """

    def __init__(
        self,
        theta=0.6,
        alpha_db=1.8,
        rho=1e4,
        max_iters=150,
        residual_tol=1e-6,
        bisect_tol=1e-10,
        oversampling=4,
    ):
        self.theta = theta
        self.alpha_db = alpha_db
        self.rho = rho
        self.max_iters = max_iters
        self.residual_tol = residual_tol
        self.bisect_tol = bisect_tol
        self.oversampling = oversampling

    def solver_config(self):
        return SolverConfig.from_db(
            self.alpha_db,
            theta=self.theta,
            rho=self.rho,
            max_iters=self.max_iters,
            residual_tol=self.residual_tol,
            bisect_tol=self.bisect_tol,
            oversampling=self.oversampling,
        )

    def fit(self, X, y=None):
        self.solver_config()
        self._validate_fit(X)
        return self

    def transform(self, X):
        X = self._validate_transform(X)
        self.results_ = solve_batch(X, self.solver_config())
        return np.stack([r.x for r in self.results_])


class WeightedBaselineDesigner(_DesignerMixin, BaseEstimator):
    """Weighted combination ``w c + (1 - w) x0`` with a fixed low-PAPR radar spectrum ``x0``.

    ``fit`` builds ``x0`` for the observed subcarrier count.
    """

    def __init__(self, w=0.65, radar_root=1, oversampling=4):
        self.w = w
        self.radar_root = radar_root
        self.oversampling = oversampling

    def fit(self, X, y=None):
        if not 0.0 <= self.w <= 1.0:
            raise ConfigError(f"w must lie in [0, 1], got {self.w}")
        X = self._validate_fit(X)
        self.radar_ref_ = radar_reference(X.shape[1], self.radar_root, oversampling=self.oversampling)
        self.weights_ = BaselineWeights(self.w, self.radar_ref_)
        return self

    def transform(self, X):
        X = self._validate_transform(X)
        check_fitted(self, ["radar_ref_"])
        # parameters may have been reset via set_params after fit
        return baseline_design(X, BaselineWeights(self.w, self.radar_ref_))

    def receive(self, Y):
        """Remove the known radar term and rescale: ``(y - (1 - w) x0) / w``."""
        check_fitted(self, ["radar_ref_"])
        if self.w == 0:
            raise ConfigError("w = 0 carries no payload; nothing to receive")
        Y = check_spectra(Y, n_features=self.n_features_in_)
        return (Y - (1.0 - self.w) * self.radar_ref_) / self.w


class PlainOFDMDesigner(_DesignerMixin, BaseEstimator):
    """Unmodified OFDM: the transmit spectrum is the QPSK payload itself."""

    def __init__(self, oversampling=4):
        self.oversampling = oversampling

    def fit(self, X, y=None):
        self._validate_fit(X)
        return self

    def transform(self, X):
        return self._validate_transform(X).copy()


def make_designer(method, **params):
    """Build a designer by name: ``"plpoi"``, ``"baseline"`` or ``"plain"``."""
    kinds = {
        "plpoi": PLPOIDesigner,
        "baseline": WeightedBaselineDesigner,
        "plain": PlainOFDMDesigner,
    }
    if method not in kinds:
        raise ConfigError(f"unknown method {method!r}; expected one of {sorted(kinds)}")
    if method == "plpoi" and "theta" in params:
        check_theta(params["theta"])
    return kinds[method](**params)
