"""Shared fixtures and independently-coded oracles used across the test modules."""
from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.special import logsumexp

from mgmwatch import MixedModel, chain_model


@pytest.fixture
def demo_model() -> MixedModel:
    return chain_model()


def make_random_model(rng: np.random.Generator, n_cat: int, n_quant: int,
                      scale: float = 1.0) -> MixedModel:
    """Random valid model: delta = A'A + q*I keeps the precision well conditioned."""
    a = rng.normal(size=(n_quant, n_quant))
    delta = a.T @ a + n_quant * np.eye(n_quant)
    theta = rng.uniform(-scale, scale, (n_cat, n_cat))
    theta = (theta + theta.T) / 2.0
    phi = rng.uniform(-scale, scale, (n_cat, n_quant))
    mu = rng.uniform(-scale, scale, n_quant)
    return MixedModel(theta=theta, mu=mu, delta=delta, phi=phi)


def make_random_observation(rng: np.random.Generator, n_cat: int, n_quant: int):
    x_cat = rng.integers(0, 2, n_cat).astype(float)
    x_quant = rng.normal(0.0, 2.0, n_quant)
    return x_cat, x_quant


def joint_exponent(theta, mu, delta, phi, x_cat, x_quant) -> float:
    """The density exponent, written out independently of the package."""
    x_cat = np.asarray(x_cat, dtype=float)
    x_quant = np.asarray(x_quant, dtype=float)
    return float(
        x_cat @ np.asarray(theta) @ x_cat
        + np.asarray(mu) @ x_quant
        - 0.5 * x_quant @ np.asarray(delta) @ x_quant
        + x_cat @ np.asarray(phi) @ x_quant
    )


def covariance_form_conditional(model: MixedModel, x_cat, x_quant, i: int):
    """Conditional mean/sd of continuous variable i via the covariance route.

    Inverts the precision explicitly and applies the classic partitioned-
    Gaussian formulas; deliberately a different computation path from the
    package's precision-form expressions.
    """
    sigma = np.linalg.inv(model.delta)
    nu = sigma @ (model.mu + model.phi.T @ np.asarray(x_cat, dtype=float))
    rest = [j for j in range(model.n_quant) if j != i]
    if not rest:
        return float(nu[i]), float(np.sqrt(sigma[i, i]))
    s_ir = sigma[i, rest]
    s_rr = sigma[np.ix_(rest, rest)]
    gap = np.asarray(x_quant, dtype=float)[rest] - nu[rest]
    mean = nu[i] + s_ir @ np.linalg.solve(s_rr, gap)
    var = sigma[i, i] - s_ir @ np.linalg.solve(s_rr, s_ir)
    return float(mean), float(np.sqrt(var))


def quadrature_cat_marginal(model: MixedModel, n_nodes: int = 120, width: float = 12.0):
    """Binary-state probabilities by tensor quadrature over the continuous block.

    For each binary state the joint exponent is integrated over the
    continuous variables with Gauss-Legendre nodes on a box of +-width
    marginal standard deviations around that state's conditional mean.
    Returns (states, probabilities, log_integrals).
    """
    c, q = model.n_cat, model.n_quant
    states = np.array(list(itertools.product((0.0, 1.0), repeat=c)))[:, ::-1]
    # column j of `states` is variable j; reversal makes state index k match bit j
    sigma = np.linalg.inv(model.delta)
    sds = np.sqrt(np.diag(sigma))
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    log_integrals = np.empty(states.shape[0])
    for s_idx, x_cat in enumerate(states):
        center = np.linalg.solve(model.delta, model.mu + model.phi.T @ x_cat)
        axes, log_w = [], []
        for d in range(q):
            half = width * sds[d]
            axes.append(center[d] + half * nodes)
            log_w.append(np.log(weights * half))
        grids = np.meshgrid(*axes, indexing="ij") if q else []
        points = (np.stack([g.ravel() for g in grids], axis=1)
                  if q else np.zeros((1, 0)))
        expo = np.array([
            joint_exponent(model.theta, model.mu, model.delta, model.phi, x_cat, pt)
            for pt in points
        ])
        if q:
            wsum = np.zeros(points.shape[0])
            lw_grids = np.meshgrid(*log_w, indexing="ij")
            for g in lw_grids:
                wsum += g.ravel()
            log_integrals[s_idx] = logsumexp(expo + wsum)
        else:
            log_integrals[s_idx] = expo[0]
    probs = np.exp(log_integrals - logsumexp(log_integrals))
    return states, probs, log_integrals
