"""Estimator-style front ends for the CUSUM detector and the rank-scan baseline.

Both classes follow scikit-learn conventions (constructor stores parameters
verbatim, ``fit`` produces trailing-underscore attributes, ``get_params`` /
``set_params`` / ``clone`` work) so they drop into pipelines and grid
utilities.  Streams are plain 2-d arrays with binary columns first and
continuous columns after them, the same layout the CSV format uses.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .detect import DetectionReport, DetectorConfig, calibrate_threshold, run_detector
from .model import MixedModel
from .rankscan import rank_scan, scan_threshold
from .validation import split_stream

__all__ = ["CusumMonitor", "PettittScanner"]


class CusumMonitor(BaseEstimator):
    """Per-variable two-sided CUSUM monitor over a mixed model's stream.

    Parameters
    ----------
    model : MixedModel
        The in-control model whose conditionals score each observation.
    delta : float
        Alternative size in conditional standard deviations.
    threshold : float or None
        Alarm threshold; when None, ``fit`` calibrates it by Monte Carlo to
        ``target_fa`` over ``calibration_horizon`` steps.
    target_fa, calibration_horizon, calibration_runs
        Calibration settings used only when ``threshold`` is None.
    clamp_eps : float
        Probability clamp for the binary-variable log-ratios.
    reset_on_alarm : bool
        Zero a variable's statistics after its first crossing.
    random_state : int, Generator or None
        Seeds the calibration draws.

    ``transform`` and ``predict`` each process ``X`` as one complete stream
    started from zeroed statistics; feed growing prefixes (or use
    ``DetectorBank`` directly) for online use.
    """

    def __init__(
        self,
        model: MixedModel | None = None,
        delta: float = 1.0,
        threshold: float | None = None,
        target_fa: float = 0.05,
        calibration_horizon: int = 50,
        calibration_runs: int = 1000,
        clamp_eps: float = 1e-12,
        reset_on_alarm: bool = False,
        random_state=None,
    ):
        self.model = model
        self.delta = delta
        self.threshold = threshold
        self.target_fa = target_fa
        self.calibration_horizon = calibration_horizon
        self.calibration_runs = calibration_runs
        self.clamp_eps = clamp_eps
        self.reset_on_alarm = reset_on_alarm
        self.random_state = random_state

    def fit(self, X=None, y=None):
        """Validate the model and fix the alarm threshold (calibrating if needed).

        ``X`` and ``y`` are accepted for pipeline compatibility and ignored:
        the in-control law comes from ``model``, not from data.
        """
        if self.model is None:
            raise ValueError("CusumMonitor requires a MixedModel via the 'model' parameter")
        if not isinstance(self.model, MixedModel):
            raise TypeError("model must be a MixedModel")
        if self.threshold is not None:
            self.threshold_ = float(self.threshold)
        else:
            self.threshold_ = calibrate_threshold(
                self.model,
                delta=self.delta,
                horizon=self.calibration_horizon,
                target_fa=self.target_fa,
                n_runs=self.calibration_runs,
                rng=np.random.default_rng(self.random_state),
                clamp_eps=self.clamp_eps,
            )
        self.model_ = self.model
        self.n_features_in_ = self.model.n_vars
        return self

    def _check_fitted(self):
        if not hasattr(self, "threshold_"):
            raise NotFittedError("this CusumMonitor is not fitted yet; call fit first")

    def _config(self) -> DetectorConfig:
        return DetectorConfig(
            threshold=self.threshold_,
            delta=self.delta,
            clamp_eps=self.clamp_eps,
            reset_on_alarm=self.reset_on_alarm,
        )

    def report(self, X) -> DetectionReport:
        """Full detection output (trajectories, events, first alarms) for one stream."""
        self._check_fitted()
        x_cat, x_quant = split_stream(X, self.model_.n_cat, self.model_.n_quant)
        return run_detector(self.model_, x_cat, x_quant, self._config())

    def transform(self, X) -> np.ndarray:
        """Combined statistic trajectories, shape (n_steps, n_variables)."""
        return self.report(X).s_bar

    def predict(self, X) -> np.ndarray:
        """Boolean alarm state per step and variable: statistic above threshold."""
        return self.transform(X) > self.threshold_

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class PettittScanner(BaseEstimator):
    """Batch rank-scan change detector applied column-wise.

    Works on any numeric columns; for mixed streams pass the continuous
    block (or use ``baseline_report``, which slices it for you).  ``fit``
    scans the given window and stores per-column results; ``predict``
    re-scans whatever window it is handed.
    """

    def __init__(
        self,
        alpha: float = 0.05,
        method: str = "asymptotic",
        n_runs: int = 10000,
        random_state=None,
    ):
        self.alpha = alpha
        self.method = method
        self.n_runs = n_runs
        self.random_state = random_state

    def _scan_all(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-d array, got ndim={X.ndim}")
        thr = scan_threshold(
            X.shape[0],
            alpha=self.alpha,
            method=self.method,
            n_runs=self.n_runs,
            rng=np.random.default_rng(self.random_state),
        )
        return [rank_scan(X[:, j], threshold=thr) for j in range(X.shape[1])], thr

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        scans, thr = self._scan_all(X)
        self.threshold_ = thr
        self.statistic_ = np.column_stack([s.u for s in scans]) if scans else np.empty((0, 0))
        self.change_point_ = np.array([s.k for s in scans], dtype=int)
        self.detected_ = np.array([s.detected for s in scans], dtype=bool)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "threshold_"):
            raise NotFittedError("this PettittScanner is not fitted yet; call fit first")

    def transform(self, X) -> np.ndarray:
        """Scan statistic curves for ``X``, shape (n_steps - 1, n_columns)."""
        self._check_fitted()
        scans, _ = self._scan_all(X)
        return np.column_stack([s.u for s in scans])

    def predict(self, X) -> np.ndarray:
        """Boolean change verdict per column of ``X``."""
        self._check_fitted()
        scans, _ = self._scan_all(X)
        return np.array([s.detected for s in scans], dtype=bool)

    def fit_predict(self, X, y=None):
        return self.fit(X, y).detected_
