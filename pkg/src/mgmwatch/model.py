"""Pairwise graphical model over mixed binary/continuous variables.

The joint density of ``x = (x_cat, x_quant)`` with ``x_cat in {0,1}^c`` and
``x_quant in R^q`` is proportional to::

    exp( x_cat' Theta x_cat + mu' x_quant
         - x_quant' Delta x_quant / 2 + x_cat' Phi x_quant )

where ``Theta`` is symmetric (its diagonal holds the singleton potentials,
since b**2 == b for binary b), ``Delta`` is the symmetric positive definite
precision of the continuous block and ``Phi`` couples the two blocks.  The
normalising constant is intractable and never computed; every downstream
computation uses closed-form conditional distributions instead:

* each continuous variable given everything else is Gaussian, read directly
  off the precision matrix;
* each binary variable given everything else is Bernoulli with a logit that
  is linear in the conditioning state;
* the full binary block has an Ising marginal whose interaction matrix is
  obtained by integrating the continuous block out analytically, which makes
  exact sampling possible by enumeration for moderate block sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import expit

from .errors import (
    DimensionMismatchError,
    EnumerationCapError,
    NotPositiveDefiniteError,
)
from .validation import (
    as_float_matrix,
    as_float_vector,
    check_binary,
    check_finite,
    symmetrized,
)

__all__ = [
    "SYMMETRY_TOL",
    "ENUMERATION_CAP",
    "MixedModel",
    "Observation",
    "ConditionalGaussian",
    "ConditionalBernoulli",
    "IsingMarginal",
    "conditional_gaussian",
    "conditional_bernoulli",
    "log_unnormalized_density",
    "gaussian_block_mean",
    "ising_marginal",
]

# Asymmetry beyond this is an error; below it, matrices are averaged symmetric.
SYMMETRY_TOL = 1e-10

# Largest binary block for which the 2**c state table is enumerated (8 MB of floats).
ENUMERATION_CAP = 20

# Enumeration works in blocks of states so the transient bit matrix stays small.
_ENUM_BLOCK = 1 << 16

_ONE_MINUS = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(float).tiny)


@dataclass(frozen=True, eq=False)
class MixedModel:
    """Validated parameter set of the pairwise mixed model.

    Parameters
    ----------
    theta : (c, c) array
        Symmetric interaction matrix of the binary block.
    mu : (q,) array
        Linear potential of the continuous block.
    delta : (q, q) array
        Symmetric positive definite precision of the continuous block.
    phi : (c, q) array
        Cross-block coupling.
    cat_names, quant_names : sequence of str, optional
        Variable labels; default to ``c0..`` and ``q0..``.

    Construction validates shapes, symmetry (tolerance ``SYMMETRY_TOL``,
    then exact averaging) and positive definiteness, and caches the lower
    Cholesky factor of ``delta`` so conditional means are solved without
    ever forming an explicit inverse.
    """

    theta: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    phi: np.ndarray
    cat_names: tuple[str, ...] = ()
    quant_names: tuple[str, ...] = ()

    def __post_init__(self):
        theta = symmetrized(as_float_matrix(self.theta, "theta"), "theta", SYMMETRY_TOL)
        delta = symmetrized(as_float_matrix(self.delta, "delta"), "delta", SYMMETRY_TOL)
        mu = as_float_vector(self.mu, "mu")
        phi = as_float_matrix(self.phi, "phi")
        c = theta.shape[0]
        q = delta.shape[0]
        if mu.shape != (q,):
            raise _dim(f"mu has shape {mu.shape}, expected ({q},) to match delta")
        if phi.shape != (c, q):
            raise _dim(f"phi has shape {phi.shape}, expected ({c}, {q})")
        check_finite(theta, "theta")
        check_finite(delta, "delta")
        check_finite(mu, "mu")
        check_finite(phi, "phi")
        try:
            chol = np.linalg.cholesky(delta)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("delta is not positive definite") from None
        cat_names = tuple(self.cat_names) or tuple(f"c{i}" for i in range(c))
        quant_names = tuple(self.quant_names) or tuple(f"q{i}" for i in range(q))
        if len(cat_names) != c:
            raise _dim(f"{len(cat_names)} cat_names for {c} binary variables")
        if len(quant_names) != q:
            raise _dim(f"{len(quant_names)} quant_names for {q} continuous variables")
        for name, value in (
            ("theta", theta), ("mu", mu), ("delta", delta), ("phi", phi),
            ("cat_names", cat_names), ("quant_names", quant_names),
        ):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "_chol_lower", chol)

    @property
    def n_cat(self) -> int:
        return self.theta.shape[0]

    @property
    def n_quant(self) -> int:
        return self.delta.shape[0]

    @property
    def n_vars(self) -> int:
        return self.n_cat + self.n_quant

    @property
    def var_names(self) -> tuple[str, ...]:
        return self.cat_names + self.quant_names

    @property
    def chol_lower(self) -> np.ndarray:
        """Cached lower-triangular L with delta = L L'."""
        return self._chol_lower


def _dim(msg: str) -> DimensionMismatchError:
    return DimensionMismatchError(msg)


@dataclass(frozen=True, eq=False)
class Observation:
    """One time-stamped joint state: binary block, continuous block."""

    x_cat: np.ndarray
    x_quant: np.ndarray
    t: int = 0

    def __post_init__(self):
        x_cat = as_float_vector(self.x_cat, "x_cat")
        x_quant = as_float_vector(self.x_quant, "x_quant")
        check_binary(x_cat, "x_cat")
        check_finite(x_quant, "x_quant")
        object.__setattr__(self, "x_cat", x_cat)
        object.__setattr__(self, "x_quant", x_quant)


@dataclass(frozen=True)
class ConditionalGaussian:
    """Law of one continuous variable given every other variable."""

    mean: float
    sd: float
    var_index: int


@dataclass(frozen=True)
class ConditionalBernoulli:
    """Law of one binary variable given every other variable."""

    logit: float
    p: float
    var_index: int


@dataclass(frozen=True, eq=False)
class IsingMarginal:
    """Marginal law of the full binary block, continuous block integrated out.

    ``theta`` is the effective Ising interaction matrix.  When the block is
    small enough to enumerate, ``prob_table`` holds the probability of every
    state (state k encodes variable j in bit j, least significant bit first)
    and ``log_normalizer`` the log partition sum of the effective energies.
    """

    theta: np.ndarray
    log_normalizer: float | None = None
    prob_table: np.ndarray | None = None

    @property
    def n_vars(self) -> int:
        return self.theta.shape[0]


def _check_quant_index(model: MixedModel, i: int) -> None:
    if not 0 <= i < model.n_quant:
        raise IndexError(f"continuous index {i} out of range [0, {model.n_quant})")


def _check_cat_index(model: MixedModel, i: int) -> None:
    if not 0 <= i < model.n_cat:
        raise IndexError(f"binary index {i} out of range [0, {model.n_cat})")


def _quant_cond_means(model: MixedModel, x_cat: np.ndarray, x_quant: np.ndarray) -> np.ndarray:
    """Conditional means of every continuous variable given all the others.

    Row i of delta gives  e_i = (mu_i + (phi' x_cat)_i - sum_{j != i} delta_ij x_j) / delta_ii,
    evaluated for all i at once.
    """
    d = np.diagonal(model.delta)
    return (model.mu + x_cat @ model.phi - x_quant @ model.delta + d * x_quant) / d


def _quant_cond_sds(model: MixedModel) -> np.ndarray:
    """Conditional standard deviations 1/sqrt(delta_ii); they do not depend on the state."""
    return 1.0 / np.sqrt(np.diagonal(model.delta))


def _cat_cond_logits(model: MixedModel, x_cat: np.ndarray, x_quant: np.ndarray) -> np.ndarray:
    """Conditional logits of every binary variable given all the others.

    logit_i = theta_ii + 2 sum_{j != i} theta_ij x_j + (phi x_quant)_i;
    the factor 2 comes from the symmetric off-diagonal terms of the
    quadratic form, and theta_ii survives because b**2 == b on {0,1}.
    """
    td = np.diagonal(model.theta)
    return td + 2.0 * (x_cat @ model.theta - td * x_cat) + model.phi @ x_quant


def conditional_gaussian(model: MixedModel, obs: Observation, i: int) -> ConditionalGaussian:
    """Gaussian law of continuous variable ``i`` given the rest of ``obs``."""
    _check_quant_index(model, i)
    d_ii = model.delta[i, i]
    row = model.delta[i]
    e = (model.mu[i] + model.phi[:, i] @ obs.x_cat
         - (row @ obs.x_quant - d_ii * obs.x_quant[i])) / d_ii
    return ConditionalGaussian(mean=float(e), sd=1.0 / math.sqrt(d_ii), var_index=i)


def conditional_bernoulli(model: MixedModel, obs: Observation, i: int) -> ConditionalBernoulli:
    """Bernoulli law of binary variable ``i`` given the rest of ``obs``."""
    _check_cat_index(model, i)
    t_ii = model.theta[i, i]
    logit = (t_ii + 2.0 * (model.theta[i] @ obs.x_cat - t_ii * obs.x_cat[i])
             + model.phi[i] @ obs.x_quant)
    # keep p inside the open interval even for logits beyond float range
    p = min(max(float(expit(logit)), _TINY), _ONE_MINUS)
    return ConditionalBernoulli(logit=float(logit), p=p, var_index=i)


def log_unnormalized_density(model: MixedModel, obs: Observation) -> float:
    """Exponent of the joint density at ``obs`` (the normaliser is never computed)."""
    x_c, x_q = obs.x_cat, obs.x_quant
    if x_c.shape != (model.n_cat,) or x_q.shape != (model.n_quant,):
        raise _dim(
            f"observation has blocks {x_c.shape[0]}+{x_q.shape[0]}, "
            f"model expects {model.n_cat}+{model.n_quant}"
        )
    val = 0.0
    if model.n_cat:
        val += x_c @ model.theta @ x_c
    if model.n_quant:
        val += model.mu @ x_q - 0.5 * (x_q @ model.delta @ x_q)
    if model.n_cat and model.n_quant:
        val += x_c @ model.phi @ x_q
    return float(val)


def gaussian_block_mean(model: MixedModel, x_cat) -> np.ndarray:
    """Mean of the continuous block given a binary state: solves delta m = mu + phi' x_cat.

    Accepts a single state ``(c,)`` or a batch ``(n, c)``; solved through the
    cached Cholesky factor, no explicit inverse.
    """
    x_cat = np.asarray(x_cat, dtype=float)
    b = model.mu + x_cat @ model.phi
    if model.n_quant == 0:
        return b
    cf = (model.chol_lower, True)
    if b.ndim == 1:
        return cho_solve(cf, b)
    return cho_solve(cf, b.T).T


def _state_bits(indices: np.ndarray, c: int) -> np.ndarray:
    """Decode state indices into (len, c) 0/1 float rows, bit j = variable j."""
    return ((indices[:, None] >> np.arange(c)) & 1).astype(float)


def ising_marginal(
    model: MixedModel,
    build_table: bool | None = None,
    cap: int = ENUMERATION_CAP,
) -> IsingMarginal:
    """Integrate the continuous block out of the model.

    The resulting binary marginal is Ising with interaction matrix::

        theta + phi delta^{-1} phi' / 2 + Diag(phi delta^{-1} mu)

    (the linear term folds onto the diagonal because b**2 == b).  With
    ``build_table=None`` the 2**c state table is enumerated whenever
    ``c <= cap``; ``True`` forces it (raising ``EnumerationCapError`` beyond
    the cap), ``False`` skips it.
    """
    c = model.n_cat
    if model.n_quant:
        cf = (model.chol_lower, True)
        cross = model.phi @ cho_solve(cf, model.phi.T)
        lin = model.phi @ cho_solve(cf, model.mu)
        theta_eff = model.theta + 0.25 * (cross + cross.T) + np.diag(lin)
    else:
        theta_eff = model.theta.copy()

    want = c <= cap if build_table is None else build_table
    if not want:
        return IsingMarginal(theta=theta_eff)
    if c > cap:
        raise EnumerationCapError(
            f"cannot enumerate 2**{c} binary states (cap is 2**{cap})"
        )

    n_states = 1 << c
    energies = np.empty(n_states)
    for start in range(0, n_states, _ENUM_BLOCK):
        idx = np.arange(start, min(start + _ENUM_BLOCK, n_states))
        bits = _state_bits(idx, c)
        energies[idx] = np.einsum("ij,jk,ik->i", bits, theta_eff, bits)
    peak = energies.max()
    weights = np.exp(energies - peak)
    total = weights.sum()
    return IsingMarginal(
        theta=theta_eff,
        log_normalizer=float(peak + np.log(total)),
        prob_table=weights / total,
    )
