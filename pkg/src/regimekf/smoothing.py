"""Approximate fixed-interval smoothing for collapsed-history filter runs.

Two backward passes over a retained FilterRun.  The probability pass pushes
the smoothed regime-marginal probabilities backward through the filtered
history weights.  The state pass runs the disturbance-smoother recursion
(cumulant vector r, information matrix N) per history, averaging the
successor contributions with the transition probabilities, then merges the
per-history smoothed beliefs under the smoothed history probabilities.  L
and the observation terms reuse the filter-time innovation factorizations;
nothing is refactorized here.

At t = n smoothing is a fixpoint of filtering: smoothed probabilities equal
the filtered ones and each history's smoothed belief equals its update.  The
merged covariance is a plain probability-weighted average of the member
covariances, without mean-spread terms, so it is not the covariance of the
merged mixture.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .errors import MissingRetentionError
from .fusion import FilterRun
from .model import MarkovChain, MSStateSpace


@dataclass
class SmootherRun:
    """Output of a full smoothing pass over one filter run.

    Per-period lists are indexed like the filter steps and hold one entry per
    pre-collapse history of that period; ``means``/``covs`` are the merged
    series.
    """

    family: str
    order: int
    warmup: str
    history_probs: list[np.ndarray]
    regime_probs: np.ndarray
    member_means: list[np.ndarray]
    member_covs: list[np.ndarray]
    means: np.ndarray
    covs: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.regime_probs.shape[0]


def smooth_probabilities(
    run: FilterRun, chain: MarkovChain
) -> tuple[list[np.ndarray], np.ndarray, int]:
    """Smoothed history and regime-marginal probabilities.

    Backward recursion: the smoothed weight of history H_t sums, over next
    regimes s', the smoothed marginal of s' times the filtered probability of
    H_t conditional on transitioning into s'.  A zero conditional normalizer
    with smoothed mass on s' would divide by zero; that combination
    contributes zero instead and is counted in the returned flag.
    """
    n = run.n
    h = chain.h
    Q = chain.Q
    hist: list[np.ndarray] = [np.empty(0)] * n
    marg = np.empty((n, h))
    hist[n - 1] = run.steps[n - 1].posterior.weights.copy()
    marg[n - 1] = run.steps[n - 1].regime_marginals
    dropped = 0
    for i in range(n - 2, -1, -1):
        w = run.steps[i].posterior.weights
        trans = Q[np.arange(w.size) % h, :]
        denom = trans.T @ w
        sm = np.zeros(w.size)
        for sp in range(h):
            if denom[sp] <= 0.0:
                if marg[i + 1, sp] > 0.0:
                    dropped += 1
                continue
            sm += marg[i + 1, sp] / denom[sp] * (w * trans[:, sp])
        hist[i] = sm
        marg[i] = sm.reshape(-1, h).sum(axis=0)
    return hist, marg, dropped


def _successor(code: int, h: int, order_now: int, order_next: int, regime: int) -> int:
    # growing phase appends; steady state drops the oldest digit first
    if order_next == order_now + 1:
        return code * h + regime
    return (code % h ** (order_now - 1)) * h + regime


def smooth_states(
    run: FilterRun, model: MSStateSpace
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-history smoothed means and covariances.

    Backward pass in (r, N) form.  For each history the recursion seeds from
    its own innovation (solved against the stored Cholesky factor) and adds
    the transition-probability-weighted successor terms through
    L = T(s') (I - K Z); a fully missing period contributes no observation
    term and leaves L = T(s').  Requires a run produced with retention.
    """
    if run.predicted is None:
        raise MissingRetentionError(
            "state smoothing needs a filter run with retain_for_smoothing"
        )
    n = run.n
    h = model.h
    Q = model.chain.Q
    m = model.dims[1]
    eye = np.eye(m)

    member_means: list[np.ndarray] = [np.empty(0)] * n
    member_covs: list[np.ndarray] = [np.empty(0)] * n
    r_next: np.ndarray | None = None
    n_next: np.ndarray | None = None
    order_next = 0

    for i in range(n - 1, -1, -1):
        pred = run.predicted[i]
        order_now = run.steps[i].posterior.order
        H = run.steps[i].posterior.n_components
        mask = pred.mask
        observed = bool(mask.any())
        r_now = np.empty((H, m))
        n_now = np.empty((H, m, m))
        means = np.empty((H, m))
        covs = np.empty((H, m, m))

        for code in range(H):
            s_t = code % h
            if observed:
                Z = model.regimes[s_t].Z[mask]
                chol = (pred.chols[code], pred.chol_lower)
                r_obs = Z.T @ cho_solve(chol, pred.innovations[code], check_finite=False)
                n_obs = Z.T @ cho_solve(chol, Z, check_finite=False)
                KZ = pred.gains[code] @ Z
            else:
                r_obs = np.zeros(m)
                n_obs = np.zeros((m, m))
                KZ = np.zeros((m, m))
            if i < n - 1:
                A = eye - KZ
                for sp in range(h):
                    succ = _successor(code, h, order_now, order_next, sp)
                    L = model.regimes[sp].T @ A
                    q = Q[s_t, sp]
                    r_obs = r_obs + q * (L.T @ r_next[succ])
                    n_obs = n_obs + q * (L.T @ n_next[succ] @ L)
            r_now[code] = r_obs
            n_now[code] = n_obs
            P = pred.covs[code]
            means[code] = pred.means[code] + P @ r_obs
            C = P - P @ n_obs @ P
            covs[code] = 0.5 * (C + C.T)

        member_means[i] = means
        member_covs[i] = covs
        r_next, n_next, order_next = r_now, n_now, order_now
    return member_means, member_covs


def smooth_run(run: FilterRun, model: MSStateSpace) -> SmootherRun:
    """Full smoothing pass: probabilities, states, and the merged series."""
    hist, marg, dropped = smooth_probabilities(run, model.chain)
    member_means, member_covs = smooth_states(run, model)
    n = run.n
    m = model.dims[1]
    means = np.empty((n, m))
    covs = np.empty((n, m, m))
    for i in range(n):
        means[i] = hist[i] @ member_means[i]
        covs[i] = np.tensordot(hist[i], member_covs[i], axes=1)
    return SmootherRun(
        family=run.family,
        order=run.order,
        warmup=run.warmup,
        history_probs=hist,
        regime_probs=marg,
        member_means=member_means,
        member_covs=member_covs,
        means=means,
        covs=covs,
        diagnostics={"dropped_zero_denominator": dropped},
    )
