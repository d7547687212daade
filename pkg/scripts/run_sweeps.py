#!/usr/bin/env python3
"""Parameter sweeps (action window, target grade, budget, controlled rates).

One CSV per axis, rows keyed by (policy pair, axis value, seed):

    python3 scripts/run_sweeps.py --axis theta_max --values 1..10 --out results/
"""

import argparse
from pathlib import Path

from pushpull.policies import PolicySpec
from pushpull.simulator import (POLICY_PAIRS, SimConfig, metrics_to_csv, sweep)


def parse_values(spec: str):
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(x) for x in spec.split(",") if x]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--axis", required=True,
                    choices=("theta_max", "goe_target", "c_max", "tx_rate",
                             "query_rate", "e_horizon"))
    ap.add_argument("--values", required=True)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--m-horizon", type=int, default=20_000)
    ap.add_argument("--n-horizon", type=int, default=20_000)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    values = parse_values(args.values)
    rows = []
    for sa_kind, aa_kind in POLICY_PAIRS:
        for seed in range(1, args.seeds + 1):
            cfg = SimConfig(m_horizon=args.m_horizon, n_horizon=args.n_horizon,
                            seed=seed, sa_policy=PolicySpec(sa_kind),
                            aa_policy=PolicySpec(aa_kind))
            rows.extend(sweep(cfg, args.axis, values))
            print(f"({sa_kind},{aa_kind}) seed {seed}: done")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sweep_{args.axis}.csv"
    path.write_text(metrics_to_csv(rows))
    print(f"wrote {path} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
