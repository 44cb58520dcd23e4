"""Generalized pseudo-Bayes filters of arbitrary order.

GPB(N) tracks one Gaussian per regime history of length N.  Each period the
carried length N-1 histories are expanded by the current regime, pushed
through the Kalman kernel, reweighted, and collapsed back over the oldest
regime by moment matching.  GPB(1) is the special case where the carried
posterior is a single belief and the transition factor runs through the
previous period's regime marginals.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError
from .fusion import (
    FilterRun,
    FilterStepOutput,
    HistoryPosterior,
    PredictedStep,
    collapse,
    default_posterior,
    expand_update,
)
from .model import MSStateSpace, ObservationSeries, stationary_distribution, validate_model


def _as_observations(data) -> ObservationSeries:
    if isinstance(data, ObservationSeries):
        return data
    return ObservationSeries(np.asarray(data, dtype=float))


def gpb_init(
    model: MSStateSpace, order: int, init: HistoryPosterior | None = None
) -> HistoryPosterior:
    """Carried posterior before the first observation: order-1 histories.

    An explicit ``init`` is passed through unchanged after a length check.
    """
    if order < 1:
        raise ValueError(f"filter order must be >= 1, got {order}")
    if init is not None:
        if init.order != order - 1:
            raise DimensionMismatchError(
                f"explicit init has history length {init.order}, "
                f"GPB({order}) carries length {order - 1}"
            )
        return init
    return default_posterior(model, order - 1)


def gpb_step(
    prior: HistoryPosterior,
    y: np.ndarray,
    model: MSStateSpace,
    order: int,
    prev_marginals: np.ndarray | None = None,
    mask: np.ndarray | None = None,
    retain: bool = False,
) -> tuple[FilterStepOutput, PredictedStep | None]:
    """One GPB period: expand, update, fuse, and collapse when full length.

    ``prev_marginals`` feeds the order-0 transition factor and therefore only
    matters for GPB(1) (and the first growing-window period); it defaults to
    the stationary distribution.  The returned step output holds the
    pre-collapse posterior; ``carried`` is what the next period consumes.
    """
    out, predicted = expand_update(
        prior, y, model, prev_marginals=prev_marginals, mask=mask, retain=retain
    )
    if out.posterior.order == order:
        out.carried = collapse(out.posterior)
    else:
        # growing warm-up: keep every history until full length is reached
        out.carried = out.posterior
    return out, predicted


def gpb_run(
    model: MSStateSpace,
    data,
    order: int,
    init: HistoryPosterior | None = None,
    warmup: str = "paper",
    retain: bool = False,
) -> FilterRun:
    """Filter a whole series with GPB(order).

    warmup="paper" starts from full-length histories at stationary weights;
    warmup="growing" tracks all h^t histories until length ``order`` is
    reached (with order >= n this is the oracle filter).  ``retain`` keeps
    per-history predicted quantities for the state smoother.
    """
    validate_model(model)
    obs = _as_observations(data)
    if warmup == "paper":
        prior = gpb_init(model, order, init)
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
    for t in range(obs.n):
        out, pred = gpb_step(
            prior,
            obs.y[t],
            model,
            order,
            prev_marginals=marginals,
            mask=obs.mask[t],
            retain=retain,
        )
        steps.append(out)
        if retain:
            predicted.append(pred)
        prior = out.carried
        marginals = out.regime_marginals
        total += out.loglik_increment
    return FilterRun("gpb", order, warmup, steps, predicted, total)
