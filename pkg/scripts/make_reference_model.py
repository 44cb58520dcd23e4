"""Write the reference model and a ready-to-run campaign file.

Gives the command line walkthrough in the README something concrete to chew
on: model.json for simulate/filter/smooth/compare, campaign.json for bench.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from regimekf import io as fio
from reference_models import accuracy_model


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=".", help="directory for model.json and campaign.json")
    ap.add_argument("--n-sims", type=int, default=50)
    ap.add_argument("--n", type=int, default=300)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = accuracy_model()
    fio.save_model(model, out / "model.json")
    campaign = {
        "model": "model.json",
        "n": args.n,
        "n_sims": args.n_sims,
        "seed_base": 0,
        "algorithms": [
            {"family": "gpb", "order": 1},
            {"family": "gpb", "order": 2},
            {"family": "imm", "order": 1},
        ],
        "smooth": True,
    }
    (out / "campaign.json").write_text(json.dumps(campaign, indent=2) + "\n")
    print(f"wrote {out / 'model.json'} (hash {fio.model_hash(model)})")
    print(f"wrote {out / 'campaign.json'} ({args.n_sims} seeds x {args.n} periods)")


if __name__ == "__main__":
    main()
