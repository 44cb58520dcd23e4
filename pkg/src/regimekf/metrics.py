"""Accuracy and speed evaluation across filters.

RMSE conventions: per state variable, normalized errors, averaged over
Monte-Carlo replications as a mean of per-sample RMSEs.  The Monte-Carlo
driver runs each algorithm on the same simulated paths (common random
numbers), so per-seed differences between algorithms are paired.
"""
from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeKFError
from .gpb import gpb_run
from .imm import imm_run
from .model import MSStateSpace, validate_model
from .simulate import simulate
from .smoothing import smooth_run


def rmse(
    estimates: np.ndarray, truth: np.ndarray, normalizer: np.ndarray | None = None
) -> np.ndarray:
    """Per-column root mean squared error of (estimates - truth) / normalizer.

    The normalizer defaults to ones; zero entries are refused rather than
    silently producing infinities.
    """
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.shape != truth.shape:
        raise ValueError(
            f"estimates shape {estimates.shape} != truth shape {truth.shape}"
        )
    k = estimates.shape[1]
    if normalizer is None:
        normalizer = np.ones(k)
    else:
        normalizer = np.asarray(normalizer, dtype=float)
        if normalizer.shape != (k,):
            raise ValueError(f"normalizer must have shape ({k},)")
        if np.any(normalizer == 0.0):
            raise ValueError("normalizer entries must be nonzero")
    err = (estimates - truth) / normalizer
    return np.sqrt(np.mean(err**2, axis=0))


def relative_rmse(table: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Scale each algorithm's RMSE vector by the per-variable best.

    The best algorithm lands at 1.0 in each column; ties all land at 1.0.  A
    zero best with a nonzero competitor maps to infinity.
    """
    tags = list(table)
    stacked = np.vstack([table[t] for t in tags])
    best = stacked.min(axis=0)
    out: dict[str, np.ndarray] = {}
    for t in tags:
        v = table[t]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(best > 0.0, v / np.where(best > 0.0, best, 1.0),
                             np.where(v == 0.0, 1.0, np.inf))
        out[t] = ratio
    return out


@dataclass
class AlgoSpec:
    """A filter family plus its history order."""

    family: str
    order: int

    def __post_init__(self) -> None:
        if self.family not in ("gpb", "imm"):
            raise ValueError(f"unknown filter family {self.family!r}")
        if self.order < 1:
            raise ValueError(f"filter order must be >= 1, got {self.order}")

    @property
    def tag(self) -> str:
        return f"{self.family}{self.order}"

    @classmethod
    def parse(cls, text: str) -> "AlgoSpec":
        """Parse "family:order", e.g. "gpb:2" or "imm:1"."""
        try:
            family, order = text.split(":")
            return cls(family.strip(), int(order))
        except ValueError as exc:
            raise ValueError(
                f"cannot parse algorithm spec {text!r}, expected family:order"
            ) from exc

    def run(self, model: MSStateSpace, data, warmup: str = "paper", retain: bool = False):
        runner = gpb_run if self.family == "gpb" else imm_run
        return runner(model, data, self.order, warmup=warmup, retain=retain)


@dataclass
class AlgoResult:
    """Aggregated metrics for one algorithm across surviving seeds."""

    tag: str
    n_seeds: int
    rmse_updated: np.ndarray
    prob_rmse_updated: np.ndarray
    time_update: float
    rmse_smoothed: np.ndarray | None = None
    prob_rmse_smoothed: np.ndarray | None = None
    time_smooth: float = 0.0
    state_improvement: np.ndarray | None = None
    prob_improvement: np.ndarray | None = None
    per_seed_rmse_updated: np.ndarray | None = None
    per_seed_rmse_smoothed: np.ndarray | None = None
    per_seed_prob_rmse_updated: np.ndarray | None = None
    per_seed_prob_rmse_smoothed: np.ndarray | None = None


@dataclass
class MetricReport:
    """Full Monte-Carlo campaign output."""

    n: int
    n_sims: int
    seed_base: int
    results: dict[str, AlgoResult]
    relative_updated: dict[str, np.ndarray]
    relative_smoothed: dict[str, np.ndarray] | None
    failed_seeds: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        def arr(x):
            return None if x is None else np.asarray(x).tolist()

        out = {
            "n": self.n,
            "n_sims": self.n_sims,
            "seed_base": self.seed_base,
            "failed_seeds": list(self.failed_seeds),
            "algorithms": {},
            "relative_rmse_updated": {k: arr(v) for k, v in self.relative_updated.items()},
            "relative_rmse_smoothed": None
            if self.relative_smoothed is None
            else {k: arr(v) for k, v in self.relative_smoothed.items()},
        }
        for tag, res in self.results.items():
            out["algorithms"][tag] = {
                "n_seeds": res.n_seeds,
                "rmse_updated": arr(res.rmse_updated),
                "rmse_smoothed": arr(res.rmse_smoothed),
                "prob_rmse_updated": arr(res.prob_rmse_updated),
                "prob_rmse_smoothed": arr(res.prob_rmse_smoothed),
                "state_improvement": arr(res.state_improvement),
                "prob_improvement": arr(res.prob_improvement),
                "time_update_s": res.time_update,
                "time_smooth_s": res.time_smooth,
            }
        return out


def _one_seed(payload: tuple):
    """Run every algorithm on one simulated path; returns per-algo metrics.

    Module-level so process pools can pickle it.  RegimeKFError marks the
    whole seed failed; anything else propagates.
    """
    model, n, seed, specs, normalizer, smooth, warmup = payload
    try:
        sim = simulate(model, n, seed)
        onehot = np.zeros((n, model.h))
        onehot[np.arange(n), sim.regimes] = 1.0
        out = {}
        for spec in specs:
            t0 = time.perf_counter()
            run = spec.run(model, sim.observations, warmup=warmup, retain=smooth)
            t1 = time.perf_counter()
            fused = np.vstack([s.fused_mean for s in run.steps])
            probs = np.vstack([s.regime_marginals for s in run.steps])
            entry = {
                "up": rmse(fused, sim.states, normalizer),
                "pu": rmse(probs, onehot),
                "tu": t1 - t0,
                "sm": None,
                "ps": None,
                "ts": 0.0,
            }
            if smooth:
                t2 = time.perf_counter()
                sm = smooth_run(run, model)
                t3 = time.perf_counter()
                entry["sm"] = rmse(sm.means, sim.states, normalizer)
                entry["ps"] = rmse(sm.regime_probs, onehot)
                entry["ts"] = t3 - t2
            out[spec.tag] = entry
        return "ok", seed, out
    except RegimeKFError as exc:
        return "fail", seed, f"{type(exc).__name__}: {exc}"


def monte_carlo(
    model: MSStateSpace,
    n_sims: int,
    n: int,
    algorithms: list[AlgoSpec],
    seed_base: int = 0,
    normalizer: np.ndarray | None = None,
    smooth: bool = True,
    warmup: str = "paper",
    workers: int = 1,
) -> MetricReport:
    """Monte-Carlo RMSE/speed campaign over seeds seed_base..seed_base+n_sims-1.

    Each seed simulates one path and runs every algorithm on it; a seed on
    which any algorithm fails is dropped for all of them (with a warning), so
    cross-algorithm comparisons stay paired.  ``workers`` > 1 distributes
    seeds over processes; aggregation order is fixed by seed, so the report
    does not depend on scheduling.
    """
    validate_model(model)
    m = model.dims[1]
    if normalizer is not None:
        normalizer = np.asarray(normalizer, dtype=float)
    payloads = [
        (model, n, seed_base + i, algorithms, normalizer, smooth, warmup)
        for i in range(n_sims)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_one_seed, payloads, chunksize=max(1, n_sims // (4 * workers))))
    else:
        raw = [_one_seed(p) for p in payloads]
    raw.sort(key=lambda r: r[1])

    failed = [seed for status, seed, _ in raw if status == "fail"]
    if failed:
        msgs = {seed: info for status, seed, info in raw if status == "fail"}
        warnings.warn(
            f"{len(failed)} of {n_sims} seeds failed and were excluded: "
            + "; ".join(f"seed {s}: {msgs[s]}" for s in failed[:3])
            + ("; ..." if len(failed) > 3 else "")
        )
    ok = [(seed, out) for status, seed, out in raw if status == "ok"]

    results: dict[str, AlgoResult] = {}
    for spec in algorithms:
        tag = spec.tag
        ups = np.vstack([out[tag]["up"] for _, out in ok]) if ok else np.empty((0, m))
        pus = np.vstack([out[tag]["pu"] for _, out in ok]) if ok else np.empty((0, model.h))
        t_up = float(sum(out[tag]["tu"] for _, out in ok))
        res = AlgoResult(
            tag=tag,
            n_seeds=len(ok),
            rmse_updated=ups.mean(axis=0) if ok else np.full(m, np.nan),
            prob_rmse_updated=pus.mean(axis=0) if ok else np.full(model.h, np.nan),
            time_update=t_up,
            per_seed_rmse_updated=ups,
            per_seed_prob_rmse_updated=pus,
        )
        if smooth:
            sms = np.vstack([out[tag]["sm"] for _, out in ok]) if ok else np.empty((0, m))
            pss = np.vstack([out[tag]["ps"] for _, out in ok]) if ok else np.empty((0, model.h))
            res.rmse_smoothed = sms.mean(axis=0) if ok else np.full(m, np.nan)
            res.prob_rmse_smoothed = pss.mean(axis=0) if ok else np.full(model.h, np.nan)
            res.time_smooth = float(sum(out[tag]["ts"] for _, out in ok))
            res.per_seed_rmse_smoothed = sms
            res.per_seed_prob_rmse_smoothed = pss
            with np.errstate(divide="ignore", invalid="ignore"):
                res.state_improvement = np.where(
                    res.rmse_updated > 0.0, 1.0 - res.rmse_smoothed / res.rmse_updated, 0.0
                )
                res.prob_improvement = np.where(
                    res.prob_rmse_updated > 0.0,
                    1.0 - res.prob_rmse_smoothed / res.prob_rmse_updated,
                    0.0,
                )
        results[tag] = res

    relative_updated = relative_rmse({t: r.rmse_updated for t, r in results.items()})
    relative_smoothed = None
    if smooth:
        relative_smoothed = relative_rmse(
            {t: r.rmse_smoothed for t, r in results.items()}
        )
    return MetricReport(
        n=n,
        n_sims=n_sims,
        seed_base=seed_base,
        results=results,
        relative_updated=relative_updated,
        relative_smoothed=relative_smoothed,
        failed_seeds=failed,
    )


def bootstrap_mean_lower(
    x: np.ndarray, alpha: float = 0.05, n_boot: int = 2000, seed: int = 0
) -> float:
    """Lower one-sided (1 - alpha) bootstrap confidence bound for the mean."""
    x = np.asarray(x, dtype=float)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    means = x[idx].mean(axis=1)
    return float(np.quantile(means, alpha))
