"""Shared test helpers.

The reference implementations here (plain Kalman filter, classical
fixed-interval smoother) are written straight-line with explicit matrix
inverses, independently of the package's Cholesky-based kernel, so that
matching them is a genuine two-route check rather than the same code called
twice.
"""
from __future__ import annotations

import numpy as np

from regimekf import MarkovChain, MSStateSpace, RegimeParams, stationary_state_cov


def make_random_chain(rng: np.random.Generator, h: int, min_diag: float = 0.5) -> MarkovChain:
    """Row-stochastic chain with diagonal mass at least min_diag (keeps it irreducible)."""
    if h == 1:
        return MarkovChain([[1.0]])
    Q = rng.uniform(0.05, 1.0, size=(h, h))
    Q = Q / Q.sum(axis=1, keepdims=True)
    diag = rng.uniform(min_diag, 0.97, size=h)
    for i in range(h):
        off = Q[i].copy()
        off[i] = 0.0
        if off.sum() > 0:
            off = off / off.sum() * (1.0 - diag[i])
        Q[i] = off
        Q[i, i] = diag[i]
    return MarkovChain(Q)


def make_random_regime(
    rng: np.random.Generator,
    m: int,
    p: int,
    spectral: float = 0.9,
    noise_scale: float = 1.0,
    with_intercepts: bool = True,
) -> RegimeParams:
    """Stable random regime with full-rank noise so every covariance stays PD."""
    T = rng.normal(size=(m, m))
    rho = np.max(np.abs(np.linalg.eigvals(T)))
    T = T * (rng.uniform(0.3, spectral) / max(rho, 1e-12))
    R = rng.normal(size=(m, m)) * noise_scale
    R = R + 0.3 * np.eye(m)
    Z = rng.normal(size=(p, m))
    g = rng.normal(size=(p, p)) * 0.5
    g = g + 0.4 * np.eye(p)
    c_y = rng.normal(size=p) * (0.5 if with_intercepts else 0.0)
    c_alpha = rng.normal(size=m) * (0.3 if with_intercepts else 0.0)
    return RegimeParams(c_y=c_y, Z=Z, g=g, c_alpha=c_alpha, T=T, R=R)


def make_random_model(
    rng: np.random.Generator,
    h: int,
    m: int,
    p: int,
    spectral: float = 0.9,
    with_intercepts: bool = True,
) -> MSStateSpace:
    chain = make_random_chain(rng, h)
    regimes = [
        make_random_regime(
            rng, m, p, spectral=spectral,
            noise_scale=rng.uniform(0.5, 2.0),
            with_intercepts=with_intercepts,
        )
        for _ in range(h)
    ]
    return MSStateSpace(chain, regimes)


def default_init_moments(model: MSStateSpace) -> tuple[np.ndarray, np.ndarray]:
    """The shared default prior every filter starts from (mean 0, mixed Lyapunov cov)."""
    m = model.dims[1]
    return np.zeros(m), stationary_state_cov(model)


def plain_kf(
    params: RegimeParams,
    y: np.ndarray,
    mean0: np.ndarray,
    P0: np.ndarray,
    mask: np.ndarray | None = None,
) -> dict:
    """Reference single-regime Kalman filter using explicit inverses."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if mask is None:
        mask = ~np.isnan(y)
    n = y.shape[0]
    m = mean0.shape[0]
    H_full = params.g @ params.g.T
    W = params.R @ params.R.T
    means = np.empty((n, m))
    covs = np.empty((n, m, m))
    pred_means = np.empty((n, m))
    pred_covs = np.empty((n, m, m))
    logliks = np.empty(n)
    a, P = mean0, P0
    for t in range(n):
        a = params.c_alpha + params.T @ a
        P = params.T @ P @ params.T.T + W
        pred_means[t], pred_covs[t] = a, P
        obs = mask[t]
        if not obs.any():
            logliks[t] = 0.0
        else:
            Z = params.Z[obs]
            c = params.c_y[obs]
            H = H_full[np.ix_(obs, obs)]
            v = y[t, obs] - Z @ a - c
            F = Z @ P @ Z.T + H
            Fi = np.linalg.inv(F)
            K = P @ Z.T @ Fi
            a = a + K @ v
            P = (np.eye(m) - K @ Z) @ P
            sign, logdet = np.linalg.slogdet(F)
            logliks[t] = -0.5 * (obs.sum() * np.log(2 * np.pi) + logdet + v @ Fi @ v)
        means[t], covs[t] = a, P
    return {
        "means": means,
        "covs": covs,
        "pred_means": pred_means,
        "pred_covs": pred_covs,
        "logliks": logliks,
    }


def classical_smoother(
    params: RegimeParams,
    y: np.ndarray,
    mean0: np.ndarray,
    P0: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Reference fixed-interval smoother (RTS form) on top of plain_kf."""
    kf = plain_kf(params, y, mean0, P0, mask)
    n, m = kf["means"].shape
    sm_means = np.empty((n, m))
    sm_covs = np.empty((n, m, m))
    sm_means[n - 1] = kf["means"][n - 1]
    sm_covs[n - 1] = kf["covs"][n - 1]
    for t in range(n - 2, -1, -1):
        C = kf["covs"][t] @ params.T.T @ np.linalg.inv(kf["pred_covs"][t + 1])
        sm_means[t] = kf["means"][t] + C @ (sm_means[t + 1] - kf["pred_means"][t + 1])
        sm_covs[t] = kf["covs"][t] + C @ (sm_covs[t + 1] - kf["pred_covs"][t + 1]) @ C.T
    return sm_means, sm_covs


def one_hot(regimes: np.ndarray, h: int) -> np.ndarray:
    out = np.zeros((len(regimes), h))
    out[np.arange(len(regimes)), regimes] = 1.0
    return out
