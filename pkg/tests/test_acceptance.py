"""Acceptance gate: headline guarantees at pinned tolerances.

Every test here states a contract the package ships with: oracle
equivalences, moment-preservation, the accuracy and speed orderings on the
reference campaign, and byte-level determinism of the command line tools.
Budgeted tests assert their own wall-clock limits.
"""
from __future__ import annotations

import csv
import json
import time

import numpy as np
import pytest

import regimekf as rk
from regimekf.cli import main as cli_main
from conftest import (
    classical_smoother,
    default_init_moments,
    make_random_model,
    plain_kf,
)


def _campaign_model(Q=None) -> rk.MSStateSpace:
    # frozen two-regime reference model: calm persistent regime vs volatile
    # fast-mixing regime, identified through the innovation variance
    if Q is None:
        Q = np.array([[0.95, 0.05], [0.2, 0.8]])
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


@pytest.fixture(scope="module")
def campaign():
    """One shared 100-seed accuracy campaign; several criteria read it."""
    model = _campaign_model()
    specs = [rk.AlgoSpec("gpb", 1), rk.AlgoSpec("gpb", 2), rk.AlgoSpec("imm", 1)]
    t0 = time.perf_counter()
    report = rk.monte_carlo(
        model, n_sims=100, n=300, algorithms=specs, seed_base=0, smooth=True
    )
    elapsed = time.perf_counter() - t0
    assert report.failed_seeds == []
    return report, elapsed


class TestSingleRegimeReduction:
    def test_all_filters_match_plain_kalman_filter(self):
        budget = 10.0
        tol = 1e-10
        t0 = time.perf_counter()
        worst = 0.0
        for i in range(20):
            rng = np.random.default_rng(1000 + i)
            m = int(rng.integers(1, 5))
            p = int(rng.integers(1, 4))
            model = make_random_model(rng, h=1, m=m, p=p)
            sim = rk.simulate(model, 200, seed=i)
            mean0, P0 = default_init_moments(model)
            ref = plain_kf(model.regimes[0], sim.observations, mean0, P0)
            ref_ll = ref["logliks"].sum()
            for family, order in (
                ("gpb", 1), ("gpb", 2), ("gpb", 3), ("imm", 1), ("imm", 2),
            ):
                run = rk.AlgoSpec(family, order).run(model, sim.observations)
                fused = np.vstack([s.fused_mean for s in run.steps])
                covs = np.stack([s.fused_cov for s in run.steps])
                worst = max(
                    worst,
                    float(np.abs(fused - ref["means"]).max()),
                    float(np.abs(covs - ref["covs"]).max()),
                    abs(run.total_loglik - ref_ll),
                )
        elapsed = time.perf_counter() - t0
        assert worst < tol, f"worst single-regime deviation {worst:.3e}"
        assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"


class TestExactOracleEquivalence:
    def test_growing_window_full_order_filters_reproduce_oracle(self):
        budget = 10.0
        tol = 1e-8
        t0 = time.perf_counter()
        worst = 0.0
        for i in range(20):
            rng = np.random.default_rng(2000 + i)
            model = make_random_model(rng, h=2, m=2, p=2)
            sim = rk.simulate(model, 6, seed=i)
            oracle = rk.exact_run(model, sim.observations)
            for family in ("gpb", "imm"):
                run = rk.AlgoSpec(family, 6).run(
                    model, sim.observations, warmup="growing"
                )
                for os_, fs in zip(oracle.steps, run.steps):
                    worst = max(
                        worst,
                        float(
                            np.abs(fs.regime_marginals - os_.regime_marginals).max()
                        ),
                    )
                worst = max(worst, abs(run.total_loglik - oracle.total_loglik))
        elapsed = time.perf_counter() - t0
        assert worst < tol, f"worst oracle deviation {worst:.3e}"
        assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"


class TestCollapseMomentMatching:
    def test_fused_moments_survive_collapse(self):
        tol = 1e-10
        rng = np.random.default_rng(3000)
        worst = 0.0
        for _ in range(1000):
            h = int(rng.integers(2, 4))
            order = int(rng.integers(2, 4))
            m = int(rng.integers(1, 4))
            H = h**order
            weights = rng.dirichlet(np.ones(H))
            means = rng.normal(size=(H, m))
            covs = np.empty((H, m, m))
            for c in range(H):
                A = rng.normal(size=(m, m))
                covs[c] = A @ A.T + 0.1 * np.eye(m)
            post = rk.HistoryPosterior(order, h, weights, means, covs)
            mean_a, cov_a, marg_a = rk.fuse(post)
            mean_b, cov_b, marg_b = rk.fuse(rk.collapse(post))
            worst = max(
                worst,
                float(np.abs(mean_a - mean_b).max()),
                float(np.abs(cov_a - cov_b).max()),
                float(np.abs(marg_a - marg_b).max()),
            )
        assert worst < tol, f"worst collapse moment drift {worst:.3e}"


class TestSmootherReductions:
    def test_single_regime_smoother_matches_classical(self):
        tol = 1e-10
        worst = 0.0
        for i in range(20):
            rng = np.random.default_rng(4000 + i)
            m = int(rng.integers(1, 4))
            p = int(rng.integers(1, 3))
            model = make_random_model(rng, h=1, m=m, p=p)
            sim = rk.simulate(model, 50, seed=i)
            run = rk.gpb_run(model, sim.observations, 1, retain=True)
            sm = rk.smooth_run(run, model)
            mean0, P0 = default_init_moments(model)
            ref_means, ref_covs = classical_smoother(
                model.regimes[0], sim.observations, mean0, P0
            )
            worst = max(
                worst,
                float(np.abs(sm.means - ref_means).max()),
                float(np.abs(sm.covs - ref_covs).max()),
            )
        assert worst < tol, f"worst classical-smoother deviation {worst:.3e}"

    def test_final_period_fixpoint_and_covariance_shrinkage(self):
        # fixpoint at t=n and P_{t|n} below P_{t|t-1} must hold on every
        # retained run, multi-regime ones included
        model = _campaign_model()
        sim = rk.simulate(model, 40, seed=123)
        runs = [
            rk.gpb_run(model, sim.observations, 2, retain=True),
            rk.imm_run(model, sim.observations, 1, retain=True),
            rk.exact_run(model, sim.observations, max_n=10, retain=True),
        ]
        rng = np.random.default_rng(4100)
        single = make_random_model(rng, h=1, m=2, p=2)
        sim1 = rk.simulate(single, 40, seed=5)
        runs.append(rk.gpb_run(single, sim1.observations, 1, retain=True))
        for run in runs:
            mdl = model if run.steps[0].regime_marginals.size == 2 else single
            sm = rk.smooth_run(run, mdl)
            last = run.steps[-1]
            np.testing.assert_allclose(
                sm.history_probs[-1], last.posterior.weights, atol=1e-12
            )
            np.testing.assert_allclose(
                sm.member_means[-1], last.posterior.means, atol=1e-10
            )
            np.testing.assert_allclose(
                sm.member_covs[-1], last.posterior.covs, atol=1e-10
            )
            for t in range(run.n):
                for code in range(run.steps[t].posterior.n_components):
                    gap = run.predicted[t].covs[code] - sm.member_covs[t][code]
                    low = float(np.linalg.eigvalsh(gap).min())
                    assert low >= -1e-8, (
                        f"smoothed covariance exceeds predicted at t={t}, "
                        f"history {code}: min eig {low:.3e}"
                    )


class TestSmoothingImprovesAccuracy:
    def test_smoothing_lowers_state_rmse_and_not_worse_on_probs(self, campaign):
        report, elapsed = campaign
        budget = 120.0
        assert elapsed < budget, f"campaign took {elapsed:.1f}s, budget {budget}s"
        for tag, res in report.results.items():
            assert np.all(res.rmse_smoothed < res.rmse_updated), (
                f"{tag}: smoothed state RMSE {res.rmse_smoothed} not strictly "
                f"below updated {res.rmse_updated}"
            )
            assert np.all(
                res.prob_rmse_smoothed <= res.prob_rmse_updated + 1e-9
            ), (
                f"{tag}: smoothed probability RMSE {res.prob_rmse_smoothed} "
                f"worse than updated {res.prob_rmse_updated}"
            )


class TestAccuracyOrdering:
    def test_order_one_collapse_is_worst_at_95_confidence(self, campaign):
        report, _ = campaign

        def per_seed(tag):
            return report.results[tag].per_seed_rmse_updated.mean(axis=1)

        base = per_seed("gpb1")
        for rival in ("gpb2", "imm1"):
            diff = base - per_seed(rival)
            lower = rk.bootstrap_mean_lower(diff, alpha=0.05, seed=17)
            assert lower >= 0.0, (
                f"gpb1 minus {rival} state RMSE: mean {diff.mean():.2e}, "
                f"95% lower bound {lower:.2e} is negative"
            )


class TestSpeedOrdering:
    def test_mixing_beats_second_order_collapse_and_orders_scale_up(self):
        rng = np.random.default_rng(777)

        def regime(scale, rho):
            A = rng.normal(size=(10, 10))
            T = rho * A / np.abs(np.linalg.eigvals(A)).max()
            Z = rng.normal(size=(5, 10)) * 0.5
            g = 0.5 * np.eye(5)
            R = scale * np.eye(10) + 0.1 * rng.normal(size=(10, 10))
            return rk.RegimeParams(np.zeros(5), Z, g, np.zeros(10), T, R)

        model = rk.MSStateSpace(
            rk.MarkovChain(np.array([[0.95, 0.05], [0.2, 0.8]])),
            [regime(0.4, 0.7), regime(1.2, 0.4)],
        )
        sim = rk.simulate(model, 1000, seed=0)
        y = sim.observations

        def median7(fn):
            samples = []
            for _ in range(7):
                t0 = time.perf_counter()
                fn()
                samples.append(time.perf_counter() - t0)
            return float(np.median(samples))

        t_imm1 = median7(lambda: rk.imm_run(model, y, 1))
        t_gpb2 = median7(lambda: rk.gpb_run(model, y, 2))
        t_gpb3 = median7(lambda: rk.gpb_run(model, y, 3))
        assert t_imm1 < t_gpb2, (
            f"updating-only wall clock: imm1 {t_imm1:.3f}s not below "
            f"gpb2 {t_gpb2:.3f}s"
        )
        assert t_gpb3 > t_gpb2, (
            f"wall clock must grow with order: gpb3 {t_gpb3:.3f}s vs "
            f"gpb2 {t_gpb2:.3f}s"
        )


class TestRegimeDistinctness:
    def test_more_persistent_chain_gives_lower_probability_rmse(self):
        per_chain = {}
        for name, diag in (("p95", 0.95), ("p90", 0.90)):
            Q = np.array([[diag, 1 - diag], [1 - diag, diag]])
            report = rk.monte_carlo(
                _campaign_model(Q),
                n_sims=100,
                n=200,
                algorithms=[rk.AlgoSpec("imm", 1)],
                seed_base=0,
                smooth=False,
            )
            assert report.failed_seeds == []
            per_chain[name] = report.results["imm1"].per_seed_prob_rmse_updated.mean(
                axis=1
            )
        diff = per_chain["p90"] - per_chain["p95"]
        lower = rk.bootstrap_mean_lower(diff, alpha=0.05, seed=29)
        assert lower >= 0.0, (
            f"probability RMSE gap p90 minus p95: mean {diff.mean():.4f}, "
            f"95% lower bound {lower:.4f} is negative"
        )


class TestCliDeterminism:
    def test_every_command_rerun_is_byte_identical(self, tmp_path, capsys):
        from regimekf import io as fio

        model = _campaign_model()
        model_path = tmp_path / "model.json"
        fio.save_model(model, model_path)
        campaign_doc = {
            "model": "model.json",
            "n": 10,
            "n_sims": 2,
            "seed_base": 0,
            "algorithms": [{"family": "gpb", "order": 1}],
            "smooth": True,
        }
        campaign_path = tmp_path / "campaign.json"
        campaign_path.write_text(json.dumps(campaign_doc))

        def one_pass(root):
            data = root / "data"
            run = root / "run"
            cmp_ = root / "cmp"
            bench = root / "bench"
            assert cli_main([
                "simulate", "--model", str(model_path), "--length", "20",
                "--seed", "7", "--out", str(data),
            ]) == 0
            assert cli_main([
                "filter", "--algo", "gpb", "--order", "2",
                "--model", str(model_path), "--data", str(data / "obs.csv"),
                "--out", str(run), "--retain-for-smoothing",
            ]) == 0
            assert cli_main(["smooth", "--from", str(run)]) == 0
            assert cli_main([
                "compare", "--oracle", "--model", str(model_path),
                "--data", str(data / "obs.csv"), "--algos", "gpb:2,imm:1",
                "--max-n", "6", "--out", str(cmp_),
            ]) == 0
            assert cli_main([
                "bench", "--campaign", str(campaign_path), "--out", str(bench),
            ]) == 0
            return [
                data / "truth.csv",
                data / "obs.csv",
                run / "filtered.csv",
                run / "smoothed.csv",
                cmp_ / "compare.csv",
                bench / "tables.csv",
            ]

        first = one_pass(tmp_path / "a")
        second = one_pass(tmp_path / "b")
        capsys.readouterr()
        for fa, fb in zip(first, second):
            assert fa.read_bytes() == fb.read_bytes(), f"{fa.name} differs on rerun"
