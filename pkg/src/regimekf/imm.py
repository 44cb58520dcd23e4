"""Interacting multiple model filters of arbitrary order.

IMM(N) keeps the posterior over length-N histories the whole time.  Instead
of expanding and collapsing, each period starts by mixing the previous
mixture toward each target history under the grand transition over
histories, then runs one Kalman step per target.  Order 1 is the classic
interacting multiple model filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatchError, WeightUnderflowError
from .fusion import (
    FilterRun,
    FilterStepOutput,
    HistoryPosterior,
    PredictedStep,
    default_posterior,
    expand_update,
    fuse,
    merge_moments,
)
from .gpb import _as_observations
from .kalman import GaussianBelief, kf_forecast, kf_update
from .model import MSStateSpace, grand_transition, stationary_distribution, validate_model


@dataclass
class MixingWeights:
    """Source-history weights per mixing target.

    ``matrix[b, a]`` is the probability of source history a given a
    transition into target b; rows sum to one.  ``unreachable`` flags targets
    with zero predicted probability, whose rows are zeroed out.
    """

    matrix: np.ndarray
    unreachable: np.ndarray


def imm_init(
    model: MSStateSpace, order: int, init: HistoryPosterior | None = None
) -> HistoryPosterior:
    """Full-length carried posterior: stationary history weights, shared belief."""
    if order < 1:
        raise ValueError(f"filter order must be >= 1, got {order}")
    if init is not None:
        if init.order != order:
            raise DimensionMismatchError(
                f"explicit init has history length {init.order}, "
                f"IMM({order}) carries length {order}"
            )
        return init
    return default_posterior(model, order)


def imm_mixing_probs(weights: np.ndarray, grand: np.ndarray) -> MixingWeights:
    """Conditional source probabilities for each mixing target.

    matrix[b, a] = grand[a, b] * weights[a] / sum_a' grand[a', b] weights[a'].
    Zero-probability targets get a zero row and an unreachable flag instead of
    a division by zero.
    """
    w_pred = grand.T @ weights
    M = grand.T * weights[None, :]
    unreachable = w_pred <= 0.0
    safe = np.where(unreachable, 1.0, w_pred)
    M = M / safe[:, None]
    M[unreachable] = 0.0
    return MixingWeights(M, unreachable)


def imm_mix(
    posterior: HistoryPosterior, mixing: MixingWeights
) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched mixed belief per target history.

    Only sources whose newest order-1 regimes match the target's oldest
    order-1 regimes can transition in, so each reachable target mixes at most
    h members.  Unreachable targets fall back to the prior-weighted average
    over all sources; their weight stays zero downstream.
    """
    h = posterior.h
    H = posterior.n_components
    overlap = H // h
    m = posterior.means.shape[1]
    mixed_means = np.empty((H, m))
    mixed_covs = np.empty((H, m, m))
    src_offsets = overlap * np.arange(h)
    for b in range(H):
        if mixing.unreachable[b]:
            mixed_means[b], mixed_covs[b] = merge_moments(
                posterior.weights, posterior.means, posterior.covs
            )
            continue
        idx = b // h + src_offsets
        mixed_means[b], mixed_covs[b] = merge_moments(
            mixing.matrix[b, idx], posterior.means[idx], posterior.covs[idx]
        )
    return mixed_means, mixed_covs


def imm_step(
    prior: HistoryPosterior,
    y: np.ndarray,
    model: MSStateSpace,
    grand: np.ndarray,
    mask: np.ndarray | None = None,
    retain: bool = False,
) -> tuple[FilterStepOutput, PredictedStep | None, MixingWeights]:
    """One IMM period: mix, per-target Kalman step, reweight.

    Posterior weights are proportional to the Gaussian likelihood times the
    full predicted history probability (grand' w), normalized in the log
    domain; the increment is the log of that normalizer.
    """
    h = model.h
    H = prior.n_components
    m = prior.means.shape[1]

    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = ~np.isnan(y)
    else:
        mask = np.asarray(mask, dtype=bool) & ~np.isnan(y)
    p_eff = int(mask.sum())

    mixing = imm_mixing_probs(prior.weights, grand)
    mixed_means, mixed_covs = imm_mix(prior, mixing)
    w_pred = grand.T @ prior.weights

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

    for b in range(H):
        params = model.regimes[b % h]
        pred = kf_forecast(GaussianBelief(mixed_means[b], mixed_covs[b]), params)
        belief, stats = kf_update(pred, y, params, mask)
        means[b] = belief.mean
        covs[b] = belief.cov
        log_w[b] = log_w_pred[b] + stats.loglik
        pred_means[b] = pred.mean
        pred_covs[b] = pred.cov
        innovations[b] = stats.innovation
        chols[b] = stats.chol
        gains[b] = stats.gain
        chol_lower = stats.chol_lower

    increment = float(logsumexp(log_w))
    if not np.isfinite(increment):
        raise WeightUnderflowError(
            "all history weights underflowed in one period; "
            "the data are inconsistent with every regime history"
        )
    weights = np.exp(log_w - increment)
    weights /= weights.sum()

    posterior = HistoryPosterior(prior.order, h, weights, means, covs)
    fused_mean, fused_cov, marginals = fuse(posterior)
    out = FilterStepOutput(
        posterior, fused_mean, fused_cov, marginals, increment, carried=posterior
    )

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
    return out, predicted, mixing


def imm_run(
    model: MSStateSpace,
    data,
    order: int,
    init: HistoryPosterior | None = None,
    warmup: str = "paper",
    retain: bool = False,
) -> FilterRun:
    """Filter a whole series with IMM(order).

    Warm-up mirrors the GPB family: "paper" starts mixing at t=1 from
    stationary full-length weights, "growing" runs exact expansion steps
    until histories reach full length and only then starts mixing.
    """
    validate_model(model)
    obs = _as_observations(data)
    grand = grand_transition(model.chain, order)
    if warmup == "paper":
        prior = imm_init(model, order, init)
    elif warmup == "growing":
        if order < 1:
            raise ValueError(f"filter order must be >= 1, got {order}")
        if init is not None:
            prior = init
        else:
            prior = default_posterior(model, 0)
    else:
        raise ValueError(f"unknown warmup mode {warmup!r}")

    marginals = stationary_distribution(model.chain)
    steps: list[FilterStepOutput] = []
    predicted: list[PredictedStep] | None = [] if retain else None
    total = 0.0
    n_unreachable = 0
    for t in range(obs.n):
        if prior.order < order:
            out, pred = expand_update(
                prior,
                obs.y[t],
                model,
                prev_marginals=marginals,
                mask=obs.mask[t],
                retain=retain,
            )
            out.carried = out.posterior
        else:
            out, pred, mixing = imm_step(
                prior, obs.y[t], model, grand, mask=obs.mask[t], retain=retain
            )
            n_unreachable += int(mixing.unreachable.sum())
        steps.append(out)
        if retain:
            predicted.append(pred)
        prior = out.carried
        marginals = out.regime_marginals
        total += out.loglik_increment
    diagnostics = {"unreachable_mixing_targets": n_unreachable}
    return FilterRun("imm", order, warmup, steps, predicted, total, diagnostics)
