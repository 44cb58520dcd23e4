"""Single-regime Kalman forecast/update kernel.

Everything above this module (the collapsed-history filters) treats these
functions as the per-history workhorse.  The update factors the innovation
covariance once (Cholesky) and reuses the factor for the gain, the
log-likelihood, and, via UpdateStats, the state smoother.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularInnovationError
from .model import RegimeParams

_LOG_2PI = float(np.log(2.0 * np.pi))
_JITTER_SCALE = 1e-10


@dataclass
class GaussianBelief:
    """Gaussian state belief N(mean, cov)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))


@dataclass
class UpdateStats:
    """Byproducts of one measurement update.

    ``innovation_cov`` is the matrix that was actually factored (jittered if
    the first factorization failed); ``chol``/``chol_lower`` hold its Cholesky
    factor so later consumers solve against it instead of refactorizing.
    Arrays are empty (p_eff = 0) for a fully missing observation.
    """

    innovation: np.ndarray
    innovation_cov: np.ndarray
    gain: np.ndarray
    loglik: float
    chol: np.ndarray
    chol_lower: bool


def _factor_spd(F: np.ndarray):
    """Cholesky with the one-shot jitter policy.

    On failure adds 1e-10 * trace(F)/p to the diagonal once; a second failure
    raises SingularInnovationError.  Returns (factor, lower, matrix_used).
    """
    try:
        c, lower = cho_factor(F, lower=True, check_finite=False)
        return c, lower, F
    except np.linalg.LinAlgError:
        pass
    p = F.shape[0]
    jitter = _JITTER_SCALE * np.trace(F) / p
    if jitter > 0.0:
        Fj = F + jitter * np.eye(p)
        try:
            c, lower = cho_factor(Fj, lower=True, check_finite=False)
            return c, lower, Fj
        except np.linalg.LinAlgError:
            pass
    raise SingularInnovationError(
        "innovation covariance is not positive definite (jitter retry failed)"
    )


def kf_forecast(prior: GaussianBelief, params: RegimeParams) -> GaussianBelief:
    """One-step-ahead state prediction under one regime's dynamics."""
    mean = params.c_alpha + params.T @ prior.mean
    cov = params.T @ prior.cov @ params.T.T + params.state_noise_cov
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def kf_update(
    pred: GaussianBelief,
    y: np.ndarray,
    params: RegimeParams,
    mask: np.ndarray | None = None,
) -> tuple[GaussianBelief, UpdateStats]:
    """Measurement update of a predicted belief.

    ``mask`` marks observed entries of ``y``; when omitted it is derived from
    NaN.  Missing rows are dropped from the observation equation for this
    period.  A fully missing period leaves the belief untouched with a zero
    log-likelihood contribution.
    """
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = ~np.isnan(y)
    m = pred.mean.shape[0]
    if not mask.any():
        stats = UpdateStats(
            innovation=np.zeros(0),
            innovation_cov=np.zeros((0, 0)),
            gain=np.zeros((m, 0)),
            loglik=0.0,
            chol=np.zeros((0, 0)),
            chol_lower=True,
        )
        return GaussianBelief(pred.mean, pred.cov), stats

    Z = params.Z[mask]
    c = params.c_y[mask]
    H = params.obs_noise_cov[np.ix_(mask, mask)]
    p_eff = Z.shape[0]

    v = y[mask] - Z @ pred.mean - c
    F = Z @ pred.cov @ Z.T + H
    F = 0.5 * (F + F.T)
    c_fac, lower, F_used = _factor_spd(F)

    # K = P Z' F^-1 computed as (F^-1 Z P)' so one triangular solve serves
    # the gain, the posterior covariance, and the likelihood.
    FiZ = cho_solve((c_fac, lower), Z, check_finite=False)
    K = (FiZ @ pred.cov).T
    Fiv = cho_solve((c_fac, lower), v, check_finite=False)

    mean = pred.mean + K @ v
    cov = (np.eye(m) - K @ Z) @ pred.cov
    cov = 0.5 * (cov + cov.T)

    logdet = 2.0 * float(np.sum(np.log(np.diag(c_fac))))
    loglik = -0.5 * (p_eff * _LOG_2PI + logdet + float(v @ Fiv))

    stats = UpdateStats(
        innovation=v,
        innovation_cov=F_used,
        gain=K,
        loglik=loglik,
        chol=c_fac,
        chol_lower=lower,
    )
    return GaussianBelief(mean, cov), stats


def gaussian_loglik(v: np.ndarray, F: np.ndarray) -> float:
    """log N(v; 0, F), with the same factorization policy as kf_update."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if v.size == 0:
        return 0.0
    c_fac, lower, _ = _factor_spd(F)
    Fiv = cho_solve((c_fac, lower), v, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(c_fac))))
    return -0.5 * (v.size * _LOG_2PI + logdet + float(v @ Fiv))
