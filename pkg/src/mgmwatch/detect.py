"""Per-variable two-sided CUSUM detection on mixed streams.

Each variable is monitored through the log-likelihood ratio of its own
conditional distribution given all other variables at the same time step,
so a change in one parameter only shifts the drift of the variables whose
conditional actually involves that parameter.  Continuous variables use a
mean-shift alternative of ``delta`` conditional standard deviations; binary
variables use alternative success means re-solved at every step so that the
null drift matches the continuous case exactly.

For a Bernoulli with conditional mean ``p``, the alternative means are the
two roots of::

    p log(a/p) + (1 - p) log((1 - a)/(1 - p)) = -delta**2 / 2

one on each side of ``p``.  The left side is the expected one-step LLR under
the null, so both one-sided statistics drift downward at the common rate
``-delta**2 / 2``.  The root finder works on the logit of ``a``: the roots
can sit so close to 0 or 1 that a plain float cannot represent them (the
nearest float to 1 is about 1.1e-16 away, while a root can be 1e-190 away),
whereas their logits and the two log-ratios ``log(a/p)`` and
``log((1-a)/(1-p))`` that detection actually consumes stay comfortably
representable.  The solved pair therefore carries those log-ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .model import (
    ConditionalGaussian,
    MixedModel,
    _cat_cond_logits,
    _quant_cond_means,
)
from .sampling import sample_joint
from .validation import check_binary, check_finite

__all__ = [
    "DEFAULT_DELTA",
    "SOLVER_TOL",
    "DetectorConfig",
    "AlternativePair",
    "AlarmEvent",
    "DetectionReport",
    "DetectorBank",
    "quant_llr",
    "cat_llr",
    "solve_alternative_means",
    "cusum_step",
    "run_detector",
    "calibrate_threshold",
]

DEFAULT_DELTA = 1.0
DEFAULT_CLAMP_EPS = 1e-12
SOLVER_TOL = 1e-12

# Bisection never pushes a logit beyond this: exp(-745) is still a positive
# float, so every log-ratio stays finite even when the root itself rounds
# to exactly 0 or 1.
_LOGIT_CAP = 745.0


@dataclass(frozen=True)
class DetectorConfig:
    """Detection options: alarm threshold, alternative size, clamping, reset."""

    threshold: float
    delta: float = DEFAULT_DELTA
    clamp_eps: float = DEFAULT_CLAMP_EPS
    reset_on_alarm: bool = False
    solver_tol: float = SOLVER_TOL

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not 0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must be in (0, 0.5)")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be > 0")


@dataclass(frozen=True)
class AlternativePair:
    """Both alternative Bernoulli means for a null mean ``p``, with their log-ratios.

    ``llr_up_one`` is ``log(a_up / p)`` and ``llr_up_zero`` is
    ``log((1 - a_up)/(1 - p))``; same pattern for the down root.  These are
    exact even when ``a_up`` or ``a_down`` rounds to 1 or 0 as a float.
    """

    p: float
    a_down: float
    a_up: float
    llr_up_one: float
    llr_up_zero: float
    llr_down_one: float
    llr_down_zero: float

    def llr_up(self, x) -> float:
        return self.llr_up_one if x else self.llr_up_zero

    def llr_down(self, x) -> float:
        return self.llr_down_one if x else self.llr_down_zero


@dataclass(frozen=True)
class AlarmEvent:
    """First threshold crossing of one variable's combined statistic."""

    t: int
    var_index: int
    variable: str
    statistic: float
    threshold: float


@dataclass(frozen=True, eq=False)
class DetectionReport:
    """Batch detection output: trajectories, events, first alarms per variable."""

    s_bar: np.ndarray
    events: tuple[AlarmEvent, ...]
    first_alarm: np.ndarray
    var_names: tuple[str, ...]
    config: DetectorConfig


def quant_llr(x: float, cond: ConditionalGaussian, delta_signed: float) -> float:
    """One-step LLR of a continuous observation for a mean shift of ``delta_signed`` sds.

    Equals ``z * delta_signed - delta_signed**2 / 2`` with standardized
    residual ``z``; its null expectation is ``-delta_signed**2 / 2``.
    """
    z = (x - cond.mean) / cond.sd
    return z * delta_signed - 0.5 * delta_signed * delta_signed


def cat_llr(x, p: float, a: float, clamp_eps: float = DEFAULT_CLAMP_EPS) -> float:
    """One-step LLR of a binary observation against alternative mean ``a``.

    Both probabilities are clamped to ``[clamp_eps, 1 - clamp_eps]`` before
    the logs, which bounds any single step's contribution.
    """
    p = min(max(p, clamp_eps), 1.0 - clamp_eps)
    a = min(max(a, clamp_eps), 1.0 - clamp_eps)
    if x:
        return math.log(a / p)
    return math.log((1.0 - a) / (1.0 - p))


def cusum_step(s_prev: float, increment: float) -> float:
    """One reflected-at-zero accumulation step: max(s_prev + increment, 0)."""
    return max(s_prev + increment, 0.0)


def _log_sigmoid(z: float) -> float:
    if z >= 0.0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


def _solve_up_logit(p: float, log_p: float, log_1mp: float, half_d2: float, tol: float) -> float:
    """Logit of the upper root of the drift equation for null mean ``p``.

    f(l) = p(log sig(l) - log p) + (1-p)(log sig(-l) - log(1-p)) + half_d2
    is half_d2 > 0 at l = logit(p) and decreasing beyond the root, so plain
    bisection applies once an upper bracket with f < 0 is found by doubling.
    If no sign change occurs before the logit cap, the cap is returned (the
    root is beyond representable probabilities; log-ratios stay finite).
    """
    q = 1.0 - p

    def f(l: float) -> float:
        return p * (_log_sigmoid(l) - log_p) + q * (_log_sigmoid(-l) - log_1mp) + half_d2

    lo = log_p - log_1mp  # logit(p)
    step = 1.0
    hi = lo + step
    f_hi = f(hi)
    while f_hi > 0.0 and hi < _LOGIT_CAP:
        step *= 2.0
        hi = min(lo + step, _LOGIT_CAP)
        f_hi = f(hi)
    if f_hi > 0.0:
        return _LOGIT_CAP
    if f_hi == 0.0:
        return hi
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(mid)):
            break
    return mid


def solve_alternative_means(
    p: float,
    delta: float,
    tol: float = SOLVER_TOL,
    clamp_eps: float = DEFAULT_CLAMP_EPS,
) -> AlternativePair:
    """Solve the drift equation for both alternative means around ``p``.

    The null mean is clamped to ``[clamp_eps, 1 - clamp_eps]`` first.  When
    ``delta**2 / 2 < tol`` the equation degenerates and both roots are ``p``
    exactly.  The lower root is obtained from the upper root of the mirrored
    problem (null mean ``1 - p``), which makes ``a_down(1/2) = 1 - a_up(1/2)``
    hold by construction.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    p = min(max(float(p), clamp_eps), 1.0 - clamp_eps)
    half_d2 = 0.5 * delta * delta
    if half_d2 < tol:
        return AlternativePair(
            p=p, a_down=p, a_up=p,
            llr_up_one=0.0, llr_up_zero=0.0, llr_down_one=0.0, llr_down_zero=0.0,
        )
    q = 1.0 - p
    log_p = math.log(p)
    log_q = math.log1p(-p)
    l_up = _solve_up_logit(p, log_p, log_q, half_d2, tol)
    l_down = -_solve_up_logit(q, log_q, math.log1p(-q), half_d2, tol)
    return AlternativePair(
        p=p,
        a_down=float(expit(l_down)),
        a_up=float(expit(l_up)),
        llr_up_one=_log_sigmoid(l_up) - log_p,
        llr_up_zero=_log_sigmoid(-l_up) - log_q,
        llr_down_one=_log_sigmoid(l_down) - log_p,
        llr_down_zero=_log_sigmoid(-l_down) - log_q,
    )


class DetectorBank:
    """Two-sided CUSUM state for every variable of a model, fed one step at a time.

    Holds one upward and one downward statistic per variable; the reported
    statistic is their sum.  ``first_alarm`` records the step of each
    variable's first crossing and is never overwritten; accumulation
    continues after an alarm unless ``config.reset_on_alarm`` zeroes the
    crossing variable's statistics.
    """

    def __init__(self, model: MixedModel, config: DetectorConfig):
        self.model = model
        self.config = config
        n = model.n_vars
        self.s_up = np.zeros(n)
        self.s_down = np.zeros(n)
        self.first_alarm = np.full(n, -1, dtype=int)
        self.t = 0
        self._inv_sd = np.sqrt(np.diagonal(model.delta))

    @property
    def s_bar(self) -> np.ndarray:
        return self.s_up + self.s_down

    def reset(self) -> None:
        self.s_up[:] = 0.0
        self.s_down[:] = 0.0
        self.first_alarm[:] = -1
        self.t = 0

    def update(self, x_cat, x_quant) -> list[AlarmEvent]:
        """Advance one step; returns the alarm events raised at this step."""
        model = self.model
        cfg = self.config
        c, q = model.n_cat, model.n_quant
        x_cat = np.asarray(x_cat, dtype=float)
        x_quant = np.asarray(x_quant, dtype=float)
        if x_cat.shape != (c,) or x_quant.shape != (q,):
            raise ValueError(
                f"expected blocks ({c},) and ({q},), got {x_cat.shape} and {x_quant.shape}"
            )
        check_binary(x_cat, "x_cat")
        check_finite(x_quant, "x_quant")

        delta = cfg.delta
        inc_up = np.empty(c + q)
        inc_down = np.empty(c + q)
        if c:
            logits = _cat_cond_logits(model, x_cat, x_quant)
            ps = np.clip(expit(logits), cfg.clamp_eps, 1.0 - cfg.clamp_eps)
            for i in range(c):
                pair = solve_alternative_means(ps[i], delta, cfg.solver_tol, cfg.clamp_eps)
                x = x_cat[i] != 0.0
                inc_up[i] = pair.llr_up(x)
                inc_down[i] = pair.llr_down(x)
        if q:
            e = _quant_cond_means(model, x_cat, x_quant)
            z = (x_quant - e) * self._inv_sd
            drift = 0.5 * delta * delta
            inc_up[c:] = z * delta - drift
            inc_down[c:] = -z * delta - drift

        self.s_up = np.maximum(self.s_up + inc_up, 0.0)
        self.s_down = np.maximum(self.s_down + inc_down, 0.0)
        s_bar = self.s_up + self.s_down

        events: list[AlarmEvent] = []
        crossing = (s_bar > cfg.threshold) & (self.first_alarm < 0)
        for idx in np.flatnonzero(crossing):
            self.first_alarm[idx] = self.t
            events.append(AlarmEvent(
                t=self.t,
                var_index=int(idx),
                variable=model.var_names[idx],
                statistic=float(s_bar[idx]),
                threshold=cfg.threshold,
            ))
        if cfg.reset_on_alarm and events:
            over = s_bar > cfg.threshold
            self.s_up[over] = 0.0
            self.s_down[over] = 0.0
        self.t += 1
        return events


def run_detector(
    model: MixedModel,
    x_cat: np.ndarray,
    x_quant: np.ndarray,
    config: DetectorConfig,
) -> DetectionReport:
    """Run a fresh bank over a whole stream and collect trajectories and events."""
    x_cat = np.atleast_2d(np.asarray(x_cat, dtype=float))
    x_quant = np.atleast_2d(np.asarray(x_quant, dtype=float))
    n_steps = x_cat.shape[0]
    bank = DetectorBank(model, config)
    s_bar = np.empty((n_steps, model.n_vars))
    events: list[AlarmEvent] = []
    for t in range(n_steps):
        events.extend(bank.update(x_cat[t], x_quant[t]))
        s_bar[t] = bank.s_bar
    return DetectionReport(
        s_bar=s_bar,
        events=tuple(events),
        first_alarm=bank.first_alarm.copy(),
        var_names=model.var_names,
        config=config,
    )


def calibrate_threshold(
    model: MixedModel,
    delta: float = DEFAULT_DELTA,
    horizon: int = 50,
    target_fa: float = 0.05,
    n_runs: int = 1000,
    rng=None,
    clamp_eps: float = DEFAULT_CLAMP_EPS,
) -> float:
    """Monte Carlo alarm threshold for a per-stream false-alarm budget.

    Simulates ``n_runs`` null streams of ``horizon`` steps, records each
    run's maximum of the combined statistic over all steps and variables,
    and returns the empirical ``1 - target_fa`` quantile of those maxima:
    the smallest threshold at which at most a ``target_fa`` fraction of
    null runs would alarm anywhere.
    """
    if not 0.0 < target_fa < 1.0:
        raise ValueError("target_fa must be strictly between 0 and 1")
    if n_runs < 100:
        raise ValueError("n_runs must be >= 100 for a usable quantile")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    probe = DetectorConfig(threshold=math.inf, delta=delta, clamp_eps=clamp_eps)
    x_cat, x_quant = sample_joint(model, n_runs * horizon, rng=rng)
    x_cat = x_cat.reshape(n_runs, horizon, model.n_cat)
    x_quant = x_quant.reshape(n_runs, horizon, model.n_quant)
    maxima = np.empty(n_runs)
    for r in range(n_runs):
        bank = DetectorBank(model, probe)
        peak = 0.0
        for t in range(horizon):
            bank.update(x_cat[r, t], x_quant[r, t])
            peak = max(peak, float(bank.s_bar.max()))
        maxima[r] = peak
    return float(np.quantile(maxima, 1.0 - target_fa))
