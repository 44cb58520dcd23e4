"""Model containers and regime-chain utilities.

A Markov-switching linear Gaussian state space model couples one set of
system matrices per regime with a first-order Markov chain over regimes:

    y_t     = c_y(s_t) + Z(s_t) alpha_t + g(s_t) eps_t,     eps_t ~ N(0, I)
    alpha_t = c_a(s_t) + T(s_t) alpha_{t-1} + R(s_t) eta_t, eta_t ~ N(0, I)

Regime histories of a fixed length are identified with integer codes in
base ``h``: oldest regime in the most significant digit, newest regime in
the least significant one.  ``drop_oldest`` and ``shift_history`` below are
then plain modular arithmetic, which is what the collapsed-history filters
lean on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .errors import (
    AbsorbingRegimeError,
    DimensionMismatchError,
    LyapunovDivergenceError,
    NonStochasticRowError,
    ReducibleChainError,
)

_ROW_SUM_TOL = 1e-12


@dataclass
class RegimeParams:
    """System matrices of a single regime.

    Shapes: c_y (p,), Z (p, m), g (p, p_e), c_alpha (m,), T (m, m), R (m, q).
    Noise loadings enter through their outer products, so ``g`` and ``R``
    need not be square.
    """

    c_y: np.ndarray
    Z: np.ndarray
    g: np.ndarray
    c_alpha: np.ndarray
    T: np.ndarray
    R: np.ndarray

    def __post_init__(self) -> None:
        self.c_y = np.atleast_1d(np.asarray(self.c_y, dtype=float))
        self.Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        self.g = np.atleast_2d(np.asarray(self.g, dtype=float))
        self.c_alpha = np.atleast_1d(np.asarray(self.c_alpha, dtype=float))
        self.T = np.atleast_2d(np.asarray(self.T, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))

    @property
    def obs_noise_cov(self) -> np.ndarray:
        return self.g @ self.g.T

    @property
    def state_noise_cov(self) -> np.ndarray:
        return self.R @ self.R.T


@dataclass
class MarkovChain:
    """Row-stochastic transition matrix; Q[i, j] = Pr[s_t = j | s_{t-1} = i]."""

    Q: np.ndarray

    def __post_init__(self) -> None:
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))

    @property
    def h(self) -> int:
        return self.Q.shape[0]


@dataclass
class MSStateSpace:
    """Full model: one RegimeParams per regime plus the switching chain."""

    chain: MarkovChain
    regimes: list[RegimeParams]

    @property
    def h(self) -> int:
        return self.chain.h

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """(p, m, p_e, q) read off regime 0."""
        r = self.regimes[0]
        return r.Z.shape[0], r.Z.shape[1], r.g.shape[1], r.R.shape[1]


@dataclass
class ObservationSeries:
    """Observed data, (n, p), with NaN marking missing entries.

    ``mask`` is True where a value was observed; derived from NaN when not
    given explicitly.
    """

    y: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if self.mask is None:
            self.mask = ~np.isnan(self.y)
        else:
            self.mask = np.atleast_2d(np.asarray(self.mask, dtype=bool))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.y.shape[1]


def validate_model(model: MSStateSpace) -> MSStateSpace:
    """Check chain stochasticity and per-regime shape consistency.

    Raises NonStochasticRowError or DimensionMismatchError; returns the model
    unchanged so calls can be chained.
    """
    Q = model.chain.Q
    h = model.chain.h
    if Q.ndim != 2 or Q.shape != (h, h):
        raise DimensionMismatchError(f"transition matrix must be square, got {Q.shape}")
    if np.any(Q < -_ROW_SUM_TOL):
        raise NonStochasticRowError("transition matrix has negative entries")
    row_sums = Q.sum(axis=1)
    bad = np.nonzero(np.abs(row_sums - 1.0) > _ROW_SUM_TOL)[0]
    if bad.size:
        i = int(bad[0])
        raise NonStochasticRowError(
            f"transition row {i} sums to {row_sums[i]:.15g}, expected 1"
        )
    if len(model.regimes) != h:
        raise DimensionMismatchError(
            f"chain has {h} regimes but {len(model.regimes)} parameter sets were given"
        )
    p, m, p_e, q = model.dims
    expected = {
        "c_y": (p,),
        "Z": (p, m),
        "g": (p, p_e),
        "c_alpha": (m,),
        "T": (m, m),
        "R": (m, q),
    }
    for s, reg in enumerate(model.regimes):
        for name, shape in expected.items():
            got = getattr(reg, name).shape
            if got != shape:
                raise DimensionMismatchError(
                    f"regime {s}: {name} has shape {got}, expected {shape}"
                )
    return model


def stationary_distribution(chain: MarkovChain) -> np.ndarray:
    """Unique stationary distribution pi with pi' Q = pi'.

    Solves (Q' - I) pi = 0 with a normalization row appended.  A rank-deficient
    system means more than one recurrent class, i.e. the stationary law is not
    unique, and raises ReducibleChainError.
    """
    h = chain.h
    A = np.vstack([chain.Q.T - np.eye(h), np.ones((1, h))])
    b = np.zeros(h + 1)
    b[-1] = 1.0
    pi, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < h:
        raise ReducibleChainError(
            "stationary distribution is not unique (reducible chain)"
        )
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def expected_duration(chain: MarkovChain, regime: int) -> tuple[float, float]:
    """Mean and standard deviation of a regime's sojourn time in periods.

    Sojourns are geometric with exit probability 1 - Q[i, i]; an absorbing
    regime has no finite expected duration.
    """
    stay = float(chain.Q[regime, regime])
    exit_prob = 1.0 - stay
    if exit_prob <= 0.0:
        raise AbsorbingRegimeError(f"regime {regime} is absorbing (diagonal >= 1)")
    return 1.0 / exit_prob, np.sqrt(stay) / exit_prob


# -- history codes ------------------------------------------------------------
#
# A length-L history (s_{t-L+1}, ..., s_t) maps to sum_k s_k h^(L-1-k): oldest
# regime in the top digit, newest in the bottom one.  Length 0 is the single
# empty history, code 0.


def n_histories(h: int, order: int) -> int:
    return h**order


def encode_history(regimes: Sequence[int], h: int) -> int:
    code = 0
    for s in regimes:
        code = code * h + int(s)
    return code


def decode_history(code: int, h: int, order: int) -> tuple[int, ...]:
    out = []
    for _ in range(order):
        out.append(code % h)
        code //= h
    return tuple(reversed(out))


def newest_regime(code: int, h: int) -> int:
    return code % h


def oldest_regime(code: int, h: int, order: int) -> int:
    return code // h ** (order - 1)


def drop_oldest(code: int, h: int, order: int) -> int:
    """Code of the same history with its oldest regime removed."""
    return code % h ** (order - 1)


def extend_history(code: int, h: int, regime: int) -> int:
    """Append a newest regime, growing the history by one."""
    return code * h + regime


def shift_history(code: int, h: int, order: int, regime: int) -> int:
    """Drop the oldest regime and append a newest one, keeping the length."""
    return (code % h ** (order - 1)) * h + regime


def grand_transition(chain: MarkovChain, order: int) -> np.ndarray:
    """Transition matrix over length-``order`` histories.

    Entry (a, b) is Q[newest(a), newest(b)] when the two histories are
    consistent, meaning a's newest order-1 regimes equal b's oldest order-1
    regimes, and 0 otherwise.  Rows are stochastic with at most h nonzeros;
    order 1 returns Q itself.
    """
    h = chain.h
    H = n_histories(h, order)
    overlap = h ** (order - 1)
    G = np.zeros((H, H))
    for a in range(H):
        tail = a % overlap
        for s in range(h):
            b = tail * h + s
            G[a, b] = chain.Q[a % h, s]
    return G


def stationary_history_weights(chain: MarkovChain, order: int) -> np.ndarray:
    """Stationary probability of each length-``order`` history.

    pi(oldest regime) times the chain transition probabilities along the
    path; the empty history (order 0) has probability 1.
    """
    if order == 0:
        return np.ones(1)
    pi = stationary_distribution(chain)
    w = np.empty(n_histories(chain.h, order))
    for code in range(w.size):
        path = decode_history(code, chain.h, order)
        prob = pi[path[0]]
        for a, b in zip(path[:-1], path[1:]):
            prob *= chain.Q[a, b]
        w[code] = prob
    return w


# -- stationary state moments -------------------------------------------------


def _spectral_radius(T: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(T))))


def regime_stationary_cov(params: RegimeParams) -> np.ndarray:
    """Solution of P = T P T' + R R' for one regime's dynamics.

    Exists only when the regime is stable; otherwise the Lyapunov iteration
    diverges and LyapunovDivergenceError is raised.
    """
    rho = _spectral_radius(params.T)
    if rho >= 1.0:
        raise LyapunovDivergenceError(
            f"state transition has spectral radius {rho:.6g} >= 1, "
            "no stationary covariance exists"
        )
    P = solve_discrete_lyapunov(params.T, params.state_noise_cov)
    return 0.5 * (P + P.T)


def regime_stationary_mean(params: RegimeParams) -> np.ndarray:
    """Fixed point of the state recursion mean, (I - T)^-1 c_alpha."""
    rho = _spectral_radius(params.T)
    if rho >= 1.0:
        raise LyapunovDivergenceError(
            f"state transition has spectral radius {rho:.6g} >= 1, "
            "no stationary mean exists"
        )
    m = params.T.shape[0]
    return np.linalg.solve(np.eye(m) - params.T, params.c_alpha)


def stationary_state_cov(model: MSStateSpace) -> np.ndarray:
    """Stationary-probability-weighted average of per-regime Lyapunov solutions.

    This is the shared default initial covariance used by every filter when no
    explicit initialization is supplied.
    """
    pi = stationary_distribution(model.chain)
    p, m, _, _ = model.dims
    P = np.zeros((m, m))
    for s, reg in enumerate(model.regimes):
        P += pi[s] * regime_stationary_cov(reg)
    return P
