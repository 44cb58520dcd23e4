"""Command line interface.

Subcommands: simulate, filter, smooth, compare, bench.  All failures exit
with status 1 and a single stderr line of the form ``error[<code>]: <msg>``.
"""
from __future__ import annotations

import argparse
import json
import os
import pickle
import sys
import time
from pathlib import Path

import numpy as np

from . import io as fio
from .errors import HistoryCapError, MissingRetentionError, RegimeKFError
from .exact import COMPONENT_CAP, exact_run
from .gpb import gpb_run
from .imm import imm_run
from .metrics import AlgoSpec, monte_carlo
from .model import MSStateSpace, ObservationSeries, n_histories
from .simulate import simulate
from .smoothing import smooth_run

RETAINED_RUN_FILE = "run.pkl"


def _check_order(h: int, order: int) -> None:
    if order < 1:
        raise HistoryCapError(f"order must be >= 1, got {order}")
    if n_histories(h, order) > COMPONENT_CAP:
        raise HistoryCapError(
            f"{h}^{order} histories exceed the cap of {COMPONENT_CAP}; lower --order"
        )


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_filter(family: str, model, data, order: int, warmup: str, retain: bool):
    runner = gpb_run if family == "gpb" else imm_run
    return runner(model, data, order, warmup=warmup, retain=retain)


def cmd_simulate(args) -> None:
    model = fio.load_model(args.model)
    out = _outdir(args.out)
    sim = simulate(model, args.length, args.seed)
    mhash = fio.model_hash(model)
    comment = fio.comment_line(seed=args.seed, model=mhash, algo="sim")
    m = sim.states.shape[1]
    truth_header = ["t", "regime"] + [f"alpha_{j + 1}" for j in range(m)]
    truth_rows = [
        [str(t + 1), str(int(sim.regimes[t]))] + [repr(float(v)) for v in sim.states[t]]
        for t in range(args.length)
    ]
    fio.write_table(out / "truth.csv", comment, truth_header, truth_rows)
    fio.save_observations(sim.observations, out / "obs.csv", comment)
    print(f"wrote {out / 'truth.csv'} and {out / 'obs.csv'} (n={args.length}, seed={args.seed})")


def cmd_filter(args) -> None:
    model = fio.load_model(args.model)
    _check_order(model.h, args.order)
    data = fio.load_observations(args.data)
    seed = fio.read_comments(args.data).get("seed", "na")
    out = _outdir(args.out)
    t0 = time.perf_counter()
    run = _run_filter(
        args.algo, model, data, args.order, args.warmup, args.retain_for_smoothing
    )
    elapsed = time.perf_counter() - t0
    mhash = fio.model_hash(model)
    comment = fio.comment_line(seed=seed, model=mhash, algo=run.algo_tag)
    m = model.dims[1]
    header = (
        ["t"]
        + [f"alpha_{j + 1}" for j in range(m)]
        + [f"mu_{s + 1}" for s in range(model.h)]
        + ["loglik_inc"]
    )
    rows = []
    for t, step in enumerate(run.steps):
        rows.append(
            [str(t + 1)]
            + [repr(float(v)) for v in step.fused_mean]
            + [repr(float(v)) for v in step.regime_marginals]
            + [repr(float(step.loglik_increment))]
        )
    fio.write_table(out / "filtered.csv", comment, header, rows)
    summary = {
        "algo": run.algo_tag,
        "family": run.family,
        "order": run.order,
        "warmup": run.warmup,
        "model_hash": mhash,
        "seed": seed,
        "n": run.n,
        "total_loglik": run.total_loglik,
        "time_update_s": elapsed,
        "retained": bool(args.retain_for_smoothing),
        "diagnostics": run.diagnostics,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if args.retain_for_smoothing:
        with open(out / RETAINED_RUN_FILE, "wb") as fh:
            pickle.dump({"run": run, "model": model, "model_hash": mhash, "seed": seed}, fh)
    print(
        f"filtered n={run.n} with {run.algo_tag} (loglik {run.total_loglik:.6f}) -> "
        f"{out / 'filtered.csv'}"
    )


def cmd_smooth(args) -> None:
    src = Path(args.from_dir)
    payload_path = src / RETAINED_RUN_FILE
    if not payload_path.exists():
        raise MissingRetentionError(
            f"{src} holds no retained filter run; rerun filter with --retain-for-smoothing"
        )
    with open(payload_path, "rb") as fh:
        payload = pickle.load(fh)
    run = payload["run"]
    model: MSStateSpace = payload["model"]
    sm = smooth_run(run, model)
    comment = fio.comment_line(
        seed=payload["seed"], model=payload["model_hash"], algo=run.algo_tag
    )
    m = model.dims[1]
    header = (
        ["t"]
        + [f"alpha_{j + 1}" for j in range(m)]
        + [f"mu_{s + 1}" for s in range(model.h)]
    )
    rows = []
    for t in range(sm.n):
        rows.append(
            [str(t + 1)]
            + [repr(float(v)) for v in sm.means[t]]
            + [repr(float(v)) for v in sm.regime_probs[t]]
        )
    fio.write_table(src / "smoothed.csv", comment, header, rows)
    print(f"smoothed n={sm.n} with {run.algo_tag} -> {src / 'smoothed.csv'}")


def cmd_compare(args) -> None:
    model = fio.load_model(args.model)
    data = fio.load_observations(args.data)
    specs = [AlgoSpec.parse(tok) for tok in args.algos.split(",") if tok.strip()]
    if not specs:
        raise ValueError("no algorithms given")
    for spec in specs:
        _check_order(model.h, spec.order)
    oracle = exact_run(model, data, max_n=args.max_n)
    n_eff = oracle.n
    short = ObservationSeries(data.y[:n_eff], data.mask[:n_eff])
    runs = {
        spec.tag: _run_filter(spec.family, model, short, spec.order, args.warmup, False)
        for spec in specs
    }
    tags = [spec.tag for spec in specs]
    header = ["t"]
    for tag in tags:
        header += [f"err_mu_{tag}", f"err_alpha_{tag}", f"err_loglik_{tag}"]
    rows = []
    maxima = {tag: [0.0, 0.0, 0.0] for tag in tags}
    for t in range(n_eff):
        ostep = oracle.steps[t]
        row = [str(t + 1)]
        for tag in tags:
            step = runs[tag].steps[t]
            errs = [
                float(np.max(np.abs(step.regime_marginals - ostep.regime_marginals))),
                float(np.max(np.abs(step.fused_mean - ostep.fused_mean))),
                abs(step.loglik_increment - ostep.loglik_increment),
            ]
            maxima[tag] = [max(a, b) for a, b in zip(maxima[tag], errs)]
            row += [repr(e) for e in errs]
        rows.append(row)
    # the CSV keeps repr round-trip values; the console table is rounded
    widths = [max(len(h), 12) for h in header]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        disp = [row[0]] + [f"{float(c):.3e}" for c in row[1:]]
        print("  ".join(c.rjust(w) for c, w in zip(disp, widths)))
    for tag in tags:
        mu, al, ll = maxima[tag]
        print(f"{tag}: max |mu err| {mu:.3e}, max |alpha err| {al:.3e}, max |loglik err| {ll:.3e}")
    if args.out:
        out = _outdir(args.out)
        comment = fio.comment_line(
            seed=fio.read_comments(args.data).get("seed", "na"),
            model=fio.model_hash(model),
            algo="compare",
        )
        fio.write_table(out / "compare.csv", comment, header, rows)
        print(f"wrote {out / 'compare.csv'}")


def cmd_bench(args) -> None:
    path = Path(args.campaign)
    try:
        campaign = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RegimeKFError(f"{path}: not valid JSON ({exc})") from exc
    try:
        model_path = Path(campaign["model"])
        if not model_path.is_absolute():
            model_path = path.parent / model_path
        model = fio.load_model(model_path)
        n = int(campaign["n"])
        n_sims = int(campaign["n_sims"])
        specs = [AlgoSpec(a["family"], int(a["order"])) for a in campaign["algorithms"]]
        seed_base = int(campaign.get("seed_base", 0))
    except KeyError as exc:
        raise RegimeKFError(f"campaign file is missing field {exc}") from exc
    for spec in specs:
        _check_order(model.h, spec.order)
    normalizer = campaign.get("normalizer")
    if normalizer is not None:
        normalizer = np.asarray(normalizer, dtype=float)
    warmup = campaign.get("warmup", "paper")
    do_smooth = bool(campaign.get("smooth", True))
    workers = args.threads if args.threads else int(os.environ.get("REGIMEKF_THREADS", "1"))

    report = monte_carlo(
        model,
        n_sims,
        n,
        specs,
        seed_base=seed_base,
        normalizer=normalizer,
        smooth=do_smooth,
        warmup=warmup,
        workers=workers,
    )
    out = _outdir(args.out)
    mhash = fio.model_hash(model)
    doc = {"campaign": campaign, "model_hash": mhash, **report.to_dict()}
    (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")

    comment = fio.comment_line(seed=seed_base, model=mhash, algo="bench")
    header = ["algo", "metric", "index", "value"]
    rows = []
    metric_fields = [
        ("rmse_updated", "alpha"),
        ("rmse_smoothed", "alpha"),
        ("prob_rmse_updated", "mu"),
        ("prob_rmse_smoothed", "mu"),
        ("state_improvement", "alpha"),
        ("prob_improvement", "mu"),
    ]
    for spec in specs:
        res = report.results[spec.tag]
        for attr, stem in metric_fields:
            vec = getattr(res, attr)
            if vec is None:
                continue
            for j, v in enumerate(np.atleast_1d(vec)):
                rows.append([spec.tag, attr, f"{stem}_{j + 1}", repr(float(v))])
        for table, name in (
            (report.relative_updated, "relative_rmse_updated"),
            (report.relative_smoothed, "relative_rmse_smoothed"),
        ):
            if table is None:
                continue
            for j, v in enumerate(table[spec.tag]):
                rows.append([spec.tag, name, f"alpha_{j + 1}", repr(float(v))])
    fio.write_table(out / "tables.csv", comment, header, rows)
    print(
        f"campaign done: {n_sims} seeds x {n} periods, {len(specs)} algorithms"
        + (f", {len(report.failed_seeds)} failed seeds" if report.failed_seeds else "")
    )
    print(f"wrote {out / 'report.json'} and {out / 'tables.csv'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimekf",
        description="Filters, smoothers, and evaluation tools for Markov-switching "
        "linear Gaussian state space models.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes for seed-parallel commands (bench); "
        "default 1, env REGIMEKF_THREADS overrides",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw one sample path from a model")
    sim.add_argument("--model", required=True)
    sim.add_argument("--length", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    fil = sub.add_parser("filter", help="run a collapsed-history filter over a series")
    fil.add_argument("--algo", choices=("gpb", "imm"), required=True)
    fil.add_argument("--order", type=int, required=True)
    fil.add_argument("--model", required=True)
    fil.add_argument("--data", required=True)
    fil.add_argument("--out", required=True)
    fil.add_argument("--retain-for-smoothing", action="store_true")
    fil.add_argument("--warmup", choices=("paper", "growing"), default="paper")
    fil.set_defaults(func=cmd_filter)

    smo = sub.add_parser("smooth", help="smooth a retained filter run")
    smo.add_argument("--from", dest="from_dir", required=True)
    smo.set_defaults(func=cmd_smooth)

    cmp_ = sub.add_parser("compare", help="per-period error of filters vs the exact oracle")
    cmp_.add_argument("--oracle", action="store_true", required=True)
    cmp_.add_argument("--model", required=True)
    cmp_.add_argument("--data", required=True)
    cmp_.add_argument("--algos", required=True, help="comma list like gpb:2,imm:1")
    cmp_.add_argument("--max-n", type=int, default=12)
    cmp_.add_argument("--warmup", choices=("paper", "growing"), default="paper")
    cmp_.add_argument("--out", default=None)
    cmp_.set_defaults(func=cmd_compare)

    ben = sub.add_parser("bench", help="Monte-Carlo RMSE and speed campaign")
    ben.add_argument("--campaign", required=True)
    ben.add_argument("--out", default=".")
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
        return 0
    except RegimeKFError as exc:
        msg = " ".join(str(exc).split())
        print(f"error[{exc.code}]: {msg}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error[bad-input]: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
