"""Synthetic data generation for Markov-switching state space models.

All randomness flows through the counter-based Philox generator keyed by the
user seed, with one stream for the regime path and one for the state and
observation noise, so a given (model, n, seed) triple replays bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    MarkovChain,
    MSStateSpace,
    regime_stationary_cov,
    regime_stationary_mean,
    stationary_distribution,
)

_CHAIN_STREAM = 0
_NOISE_STREAM = 1


@dataclass
class SimOutput:
    """One simulated sample path."""

    regimes: np.ndarray
    states: np.ndarray
    observations: np.ndarray
    seed: int


def _stream(seed: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


def _cov_factor(P: np.ndarray) -> np.ndarray:
    # eigh-based square root; tolerates the semidefinite covariances a
    # rank-deficient noise loading produces
    w, U = np.linalg.eigh(0.5 * (P + P.T))
    return U * np.sqrt(np.clip(w, 0.0, None))


def simulate_chain(
    chain: MarkovChain, n: int, seed: int, init_regime: int | None = None
) -> np.ndarray:
    """Regime path of length n; s_1 from the stationary distribution.

    ``init_regime`` forces the first regime instead of drawing it.
    """
    rng = _stream(seed, _CHAIN_STREAM)
    u = rng.random(n)
    h = chain.h
    cum_rows = np.cumsum(chain.Q, axis=1)
    s = np.empty(n, dtype=int)
    if init_regime is None:
        cum_pi = np.cumsum(stationary_distribution(chain))
        s[0] = min(int(np.searchsorted(cum_pi, u[0], side="right")), h - 1)
    else:
        s[0] = int(init_regime)
    for t in range(1, n):
        s[t] = min(int(np.searchsorted(cum_rows[s[t - 1]], u[t], side="right")), h - 1)
    return s


def simulate_ssm(
    model: MSStateSpace,
    regimes: np.ndarray,
    seed: int,
    init_state: np.ndarray | None = None,
) -> SimOutput:
    """States and observations along a given regime path.

    alpha_0 is drawn from regime 0's stationary law (mean (I-T)^-1 c_alpha,
    Lyapunov covariance) unless ``init_state`` pins it.  Per period the state
    innovation is drawn before the measurement noise; this order is part of
    the replay contract.
    """
    rng = _stream(seed, _NOISE_STREAM)
    p, m, p_e, q = model.dims
    n = len(regimes)
    if init_state is not None:
        alpha = np.asarray(init_state, dtype=float)
    else:
        par0 = model.regimes[0]
        alpha = regime_stationary_mean(par0) + _cov_factor(
            regime_stationary_cov(par0)
        ) @ rng.standard_normal(m)
    states = np.empty((n, m))
    obs = np.empty((n, p))
    for t in range(n):
        par = model.regimes[int(regimes[t])]
        alpha = par.c_alpha + par.T @ alpha + par.R @ rng.standard_normal(q)
        states[t] = alpha
        obs[t] = par.c_y + par.Z @ alpha + par.g @ rng.standard_normal(p_e)
    return SimOutput(np.asarray(regimes, dtype=int), states, obs, seed)


def simulate(
    model: MSStateSpace,
    n: int,
    seed: int,
    init_regime: int | None = None,
    init_state: np.ndarray | None = None,
) -> SimOutput:
    """Draw a regime path and a sample path through it with one seed."""
    regimes = simulate_chain(model.chain, n, seed, init_regime=init_regime)
    return simulate_ssm(model, regimes, seed, init_state=init_state)
