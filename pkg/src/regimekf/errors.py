"""Exception hierarchy.

Every error carries a stable ``code`` string so the CLI can emit single-line,
machine-parsable failures of the form ``error[<code>]: <message>``.
"""
from __future__ import annotations


class RegimeKFError(Exception):
    """Base class for all package-specific failures."""

    code = "regimekf-error"


class DimensionMismatchError(RegimeKFError):
    code = "dimension-mismatch"


class NonStochasticRowError(RegimeKFError):
    code = "non-stochastic-row"


class ReducibleChainError(RegimeKFError):
    code = "reducible-chain"


class AbsorbingRegimeError(RegimeKFError):
    code = "absorbing-regime"


class LyapunovDivergenceError(RegimeKFError):
    code = "lyapunov-divergence"


class SingularInnovationError(RegimeKFError):
    code = "singular-innovation"


class WeightUnderflowError(RegimeKFError):
    code = "weight-underflow"


class HistoryCapError(RegimeKFError):
    code = "history-cap"


class MissingRetentionError(RegimeKFError):
    code = "missing-retention"


class DataFormatError(RegimeKFError):
    code = "bad-input"
