"""Exact full-history filter.

Enumerates every regime history, so the posterior after t periods carries
h^t components.  Usable only for short samples; its role is to be the
ground truth the collapsed filters are compared against.
"""
from __future__ import annotations

import numpy as np

from .errors import HistoryCapError
from .fusion import FilterRun, FilterStepOutput, PredictedStep, default_posterior, expand_update
from .gpb import _as_observations
from .model import MSStateSpace, stationary_distribution, validate_model

COMPONENT_CAP = 2**16


def exact_run(
    model: MSStateSpace,
    data,
    max_n: int | None = None,
    cap: int = COMPONENT_CAP,
    retain: bool = False,
) -> FilterRun:
    """Exact Bayes filtering over all regime histories.

    ``max_n`` truncates the series; the run refuses to start if the final
    component count h^n would exceed ``cap``.  Weights are handled in the log
    domain inside the expansion step, the stored per-period weights are
    normalized.
    """
    validate_model(model)
    obs = _as_observations(data)
    n_eff = obs.n if max_n is None else min(obs.n, max_n)
    h = model.h
    if h > 1 and h**n_eff > cap:
        raise HistoryCapError(
            f"exact filter needs {h}^{n_eff} components, above the cap of {cap}; "
            "shorten the sample (max_n) or raise the cap"
        )

    prior = default_posterior(model, 0)
    marginals = stationary_distribution(model.chain)
    steps: list[FilterStepOutput] = []
    predicted: list[PredictedStep] | None = [] if retain else None
    total = 0.0
    for t in range(n_eff):
        out, pred = expand_update(
            prior, obs.y[t], model, prev_marginals=marginals, mask=obs.mask[t], retain=retain
        )
        out.carried = out.posterior
        steps.append(out)
        if retain:
            predicted.append(pred)
        prior = out.posterior
        marginals = out.regime_marginals
        total += out.loglik_increment
    return FilterRun("exact", n_eff, "growing", steps, predicted, total)
