"""Reference models shared by the experiment scripts.

The accuracy model is a two-regime bivariate system identified through the
innovation variance: a calm persistent regime against a volatile fast-mixing
one.  The speed model is deliberately larger (m=10, p=5) so per-period cost
is dominated by linear algebra rather than bookkeeping.
"""
from __future__ import annotations

import numpy as np

import regimekf as rk

REFERENCE_Q = np.array([[0.95, 0.05], [0.2, 0.8]])


def accuracy_model(Q: np.ndarray | None = None) -> rk.MSStateSpace:
    if Q is None:
        Q = REFERENCE_Q
    calm = rk.RegimeParams(
        c_y=[0.0, 0.0],
        Z=np.eye(2),
        g=0.4 * np.eye(2),
        c_alpha=[0.0, 0.0],
        T=np.array([[0.85, 0.10], [0.00, 0.70]]),
        R=np.diag([0.3, 0.3]),
    )
    volatile = rk.RegimeParams(
        c_y=[0.0, 0.0],
        Z=np.eye(2),
        g=0.4 * np.eye(2),
        c_alpha=[0.0, 0.0],
        T=np.array([[0.40, -0.20], [0.10, 0.30]]),
        R=np.diag([1.5, 1.2]),
    )
    return rk.MSStateSpace(rk.MarkovChain(np.asarray(Q)), [calm, volatile])


def speed_model(seed: int = 777) -> rk.MSStateSpace:
    rng = np.random.default_rng(seed)

    def regime(scale: float, rho: float) -> rk.RegimeParams:
        A = rng.normal(size=(10, 10))
        T = rho * A / np.abs(np.linalg.eigvals(A)).max()
        Z = rng.normal(size=(5, 10)) * 0.5
        g = 0.5 * np.eye(5)
        R = scale * np.eye(10) + 0.1 * rng.normal(size=(10, 10))
        return rk.RegimeParams(np.zeros(5), Z, g, np.zeros(10), T, R)

    return rk.MSStateSpace(
        rk.MarkovChain(REFERENCE_Q), [regime(0.4, 0.7), regime(1.2, 0.4)]
    )
