"""Retrospective change-point baseline: Pettitt's Mann-Whitney rank scan.

For a series x_1..x_n and every split point k, the scan statistic is

    U_k = sum_{i <= k} sum_{j > k} sgn(x_i - x_j),       k = 1..n-1

with sgn(0) = 0, so ties contribute nothing.  A change is declared when
max_k |U_k| exceeds a threshold, and the arg-max k is the estimated change
point.  This is a batch procedure over a finished window, used here as the
non-sequential contrast to the CUSUM detector.

The scan is computed through midranks: with r_i the midrank of x_i,
sum_j sgn(x_i - x_j) = 2 r_i - (n + 1) exactly (ties included), and the
within-prefix terms cancel by antisymmetry, giving
U_k = 2 sum_{i <= k} r_i - k (n + 1) in O(n log n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import SeriesTooShortError
from .validation import as_float_vector, check_finite, split_stream

__all__ = [
    "RankScan",
    "pettitt_scan",
    "scan_threshold",
    "rank_scan",
    "baseline_report",
]

_MIN_LENGTH = 4
_METHODS = ("asymptotic", "monte-carlo")


@dataclass(frozen=True, eq=False)
class RankScan:
    """Scan result for one series: all U_k, threshold, arg-max split, verdict."""

    u: np.ndarray
    threshold: float
    k: int
    detected: bool
    variable: str = ""

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.u)))


def pettitt_scan(series) -> np.ndarray:
    """All rank-scan statistics U_1..U_{n-1} for one series."""
    x = as_float_vector(series, "series")
    check_finite(x, "series")
    n = x.size
    if n < _MIN_LENGTH:
        raise SeriesTooShortError(f"need at least {_MIN_LENGTH} observations, got {n}")
    ranks = rankdata(x)
    prefix = np.cumsum(ranks)[:-1]
    k = np.arange(1, n, dtype=float)
    return 2.0 * prefix - k * (n + 1)


def scan_threshold(
    n: int,
    alpha: float = 0.05,
    method: str = "asymptotic",
    n_runs: int = 10000,
    rng=None,
) -> float:
    """Detection threshold for max_k |U_k| at level ``alpha``.

    ``asymptotic`` inverts the tail bound P(max |U| >= K) ~ 2 exp(-6 K**2 /
    (n**3 + n**2)); ``monte-carlo`` takes the empirical ``1 - alpha``
    quantile of max |U_k| over ``n_runs`` i.i.d. standard normal series
    (the statistic is distribution-free over continuous series).
    """
    if n < _MIN_LENGTH:
        raise SeriesTooShortError(f"need at least {_MIN_LENGTH} observations, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be strictly between 0 and 1")
    if method == "asymptotic":
        return math.sqrt(-math.log(alpha / 2.0) * (n**3 + n**2) / 6.0)
    if method == "monte-carlo":
        if n_runs < 100:
            raise ValueError("n_runs must be >= 100")
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        maxima = np.empty(n_runs)
        for r in range(n_runs):
            maxima[r] = np.max(np.abs(pettitt_scan(rng.standard_normal(n))))
        return float(np.quantile(maxima, 1.0 - alpha))
    raise ValueError(f"method must be one of {_METHODS}, got {method!r}")


def rank_scan(
    series,
    alpha: float = 0.05,
    method: str = "asymptotic",
    n_runs: int = 10000,
    rng=None,
    threshold: float | None = None,
    variable: str = "",
) -> RankScan:
    """Scan one series and compare against its threshold."""
    u = pettitt_scan(series)
    if threshold is None:
        threshold = scan_threshold(u.size + 1, alpha, method, n_runs, rng)
    peak = int(np.argmax(np.abs(u)))
    return RankScan(
        u=u,
        threshold=float(threshold),
        k=peak + 1,
        detected=bool(np.abs(u[peak]) > threshold),
        variable=variable,
    )


def baseline_report(
    model,
    X,
    alpha: float = 0.05,
    method: str = "asymptotic",
    n_runs: int = 10000,
    rng=None,
) -> list[RankScan]:
    """Rank-scan every continuous variable of a finished mixed stream.

    ``X`` is the usual (n, n_cat + n_quant) layout; binary columns are
    ignored (the scan is rank-based, two-valued series carry almost no
    usable ordering).  One shared threshold is computed for the common
    series length.
    """
    _, x_quant = split_stream(X, model.n_cat, model.n_quant)
    thr = scan_threshold(x_quant.shape[0], alpha, method, n_runs, rng)
    return [
        rank_scan(x_quant[:, j], threshold=thr, variable=model.quant_names[j])
        for j in range(model.n_quant)
    ]
