"""Mixture posteriors over regime histories.

Shared machinery for every filter in the package: the HistoryPosterior
container, moment-matched merging (fusion across all histories, collapse over
the oldest regime), and the exact one-regime expansion step that the GPB
family, the growing warm-up, and the oracle filter all run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import WeightUnderflowError
from .kalman import GaussianBelief, kf_forecast, kf_update
from .model import (
    MSStateSpace,
    stationary_distribution,
    stationary_history_weights,
    stationary_state_cov,
)


@dataclass
class HistoryPosterior:
    """Gaussian mixture indexed by base-h history codes of one common length.

    weights (H,), means (H, m), covs (H, m, m) with H = h**order.  Weights of
    a filtered posterior sum to one; zero-weight components are kept so the
    code-to-index mapping stays static.
    """

    order: int
    h: int
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def belief(self, code: int) -> GaussianBelief:
        return GaussianBelief(self.means[code], self.covs[code])


@dataclass
class FilterStepOutput:
    """One filtering period.

    ``posterior`` is the pre-collapse mixture over expanded histories, which
    is what the smoothers consume; ``carried`` is what the recursion feeds to
    the next period (collapsed for the GPB family, identical to ``posterior``
    for IMM and the oracle).
    """

    posterior: HistoryPosterior
    fused_mean: np.ndarray
    fused_cov: np.ndarray
    regime_marginals: np.ndarray
    loglik_increment: float
    carried: HistoryPosterior | None = None


@dataclass
class PredictedStep:
    """Filter-time per-history quantities retained for the state smoother.

    Innovation Cholesky factors are stored so the smoother re-solves against
    them instead of refactorizing.  ``mask`` is the effective observation mask
    of the period; arrays have p_eff = mask.sum() observation columns.
    """

    means: np.ndarray
    covs: np.ndarray
    innovations: np.ndarray
    chols: np.ndarray
    chol_lower: bool
    gains: np.ndarray
    mask: np.ndarray


@dataclass
class FilterRun:
    """Output of a full filtering pass."""

    family: str
    order: int
    warmup: str
    steps: list[FilterStepOutput]
    predicted: list[PredictedStep] | None
    total_loglik: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def algo_tag(self) -> str:
        return f"{self.family}{self.order}" if self.family != "exact" else "exact"


def default_posterior(model: MSStateSpace, order: int) -> HistoryPosterior:
    """Default initialization shared by every filter.

    All histories carry the same zero-mean belief whose covariance is the
    stationary-probability-weighted average of the per-regime Lyapunov
    solutions; weights are the stationary history probabilities.  Raises
    LyapunovDivergenceError through the covariance solve when some regime is
    explosive, in which case an explicit init must be supplied instead.
    """
    P0 = stationary_state_cov(model)
    m = P0.shape[0]
    w = stationary_history_weights(model.chain, order)
    means = np.zeros((w.size, m))
    covs = np.broadcast_to(P0, (w.size, m, m)).copy()
    return HistoryPosterior(order, model.h, w, means, covs)


def merge_moments(
    weights: np.ndarray, means: np.ndarray, covs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched merge of a Gaussian mixture.

    Weights need not be normalized.  A zero total weight falls back to the
    unweighted average; callers only hit that case for components whose
    downstream weight is exactly zero, so the choice is inert.
    """
    total = float(weights.sum())
    if total > 0.0:
        w = weights / total
    else:
        w = np.full(weights.shape[0], 1.0 / weights.shape[0])
    mean = w @ means
    dev = means - mean
    cov = np.tensordot(w, covs, axes=1) + (dev * w[:, None]).T @ dev
    return mean, 0.5 * (cov + cov.T)


def fuse(posterior: HistoryPosterior) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single moment-matched belief plus marginal regime probabilities.

    The covariance includes the mean-spread terms, so fusing before or after
    a collapse gives the same answer.  Marginals group weights by the newest
    regime, the low base-h digit.
    """
    mean, cov = merge_moments(posterior.weights, posterior.means, posterior.covs)
    marginals = posterior.weights.reshape(-1, posterior.h).sum(axis=0)
    return mean, cov, marginals


def collapse(posterior: HistoryPosterior) -> HistoryPosterior:
    """Drop the oldest regime by moment matching within each shortened history.

    Codes sharing a suffix differ only in the top digit, so group c collects
    codes c, c + h**(order-1), c + 2*h**(order-1), ...  Group weights are the
    summed member weights; a zero-weight group keeps a finite placeholder
    belief via the merge fallback.
    """
    h = posterior.h
    n_short = posterior.n_components // h
    m = posterior.means.shape[1]
    w = posterior.weights.reshape(h, n_short).sum(axis=0)
    means = np.empty((n_short, m))
    covs = np.empty((n_short, m, m))
    for c in range(n_short):
        means[c], covs[c] = merge_moments(
            posterior.weights[c::n_short],
            posterior.means[c::n_short],
            posterior.covs[c::n_short],
        )
    return HistoryPosterior(posterior.order - 1, h, w, means, covs)


def expand_update(
    prior: HistoryPosterior,
    y: np.ndarray,
    model: MSStateSpace,
    prev_marginals: np.ndarray | None = None,
    mask: np.ndarray | None = None,
    retain: bool = False,
) -> tuple[FilterStepOutput, PredictedStep | None]:
    """Exact Bayes step: expand each history by the current regime and update.

    Every (prior history, new regime) pair gets its own Kalman
    forecast/update; posterior weights combine the prior history weight, the
    transition probability, and the Gaussian likelihood, normalized in the
    log domain.  The empty prior history (order 0) has no last regime, so its
    transition factor is sum_i Q[i, j] * prev_marginals[i]; ``prev_marginals``
    defaults to the stationary distribution.

    Returns the step output (posterior of order prior.order + 1, ``carried``
    left unset) and, when ``retain`` is true, the per-history predicted
    quantities the state smoother needs.
    """
    h = model.h
    Q = model.chain.Q
    n_prior = prior.n_components
    H = n_prior * h
    m = prior.means.shape[1]

    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = ~np.isnan(y)
    else:
        mask = np.asarray(mask, dtype=bool) & ~np.isnan(y)
    p_eff = int(mask.sum())

    if prior.order == 0:
        if prev_marginals is None:
            prev_marginals = stationary_distribution(model.chain)
        w_pred = Q.T @ prev_marginals
    else:
        prior_last = np.arange(n_prior) % h
        w_pred = (prior.weights[:, None] * Q[prior_last, :]).ravel()

    means = np.empty((H, m))
    covs = np.empty((H, m, m))
    log_w = np.empty(H)
    pred_means = np.empty((H, m))
    pred_covs = np.empty((H, m, m))
    innovations = np.empty((H, p_eff))
    chols = np.empty((H, p_eff, p_eff))
    gains = np.empty((H, m, p_eff))
    chol_lower = True

    with np.errstate(divide="ignore"):
        log_w_pred = np.log(w_pred)

    for code in range(H):
        src = code // h
        s = code % h
        params = model.regimes[s]
        pred = kf_forecast(prior.belief(src), params)
        belief, stats = kf_update(pred, y, params, mask)
        means[code] = belief.mean
        covs[code] = belief.cov
        log_w[code] = log_w_pred[code] + stats.loglik
        pred_means[code] = pred.mean
        pred_covs[code] = pred.cov
        innovations[code] = stats.innovation
        chols[code] = stats.chol
        gains[code] = stats.gain
        chol_lower = stats.chol_lower

    increment = float(logsumexp(log_w))
    if not np.isfinite(increment):
        raise WeightUnderflowError(
            "all history weights underflowed in one period; "
            "the data are inconsistent with every regime history"
        )
    weights = np.exp(log_w - increment)
    weights /= weights.sum()

    posterior = HistoryPosterior(prior.order + 1, h, weights, means, covs)
    fused_mean, fused_cov, marginals = fuse(posterior)
    out = FilterStepOutput(posterior, fused_mean, fused_cov, marginals, increment)

    predicted = None
    if retain:
        predicted = PredictedStep(
            means=pred_means,
            covs=pred_covs,
            innovations=innovations,
            chols=chols,
            chol_lower=chol_lower,
            gains=gains,
            mask=mask,
        )
    return out, predicted
