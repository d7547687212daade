#!/usr/bin/env python3
"""Seven-pair comparison: mean effectiveness, rates, and grade per pair.

Writes one metrics row per (pair, seed) and prints a ranked summary.

    python3 scripts/run_policy_pairs.py --seeds 5 --n-horizon 50000 --out results/
"""

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from pushpull.simulator import SimConfig, metrics_to_csv, run_policy_pairs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--m-horizon", type=int, default=100_000)
    ap.add_argument("--n-horizon", type=int, default=50_000)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    base = SimConfig(m_horizon=args.m_horizon, n_horizon=args.n_horizon)
    results = run_policy_pairs(base, seeds=list(range(1, args.seeds + 1)))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "policy_pairs.csv").write_text(
        metrics_to_csv([r.metrics for r in results]))

    acc = defaultdict(list)
    for r in results:
        acc[r.metrics.policy_pair].append(r.metrics)
    print(f"{'pair':34s} {'eff':>8s} {'goe':>8s} {'tx':>7s} {'query':>7s}")
    rows = []
    for pair, ms in acc.items():
        rows.append((float(np.mean([m.avg_effectiveness for m in ms])), pair,
                     float(np.mean([m.avg_goe for m in ms])),
                     float(np.mean([m.tx_rate for m in ms])),
                     float(np.mean([m.query_rate for m in ms]))))
    for eff, pair, goe, tx, qr in sorted(rows, reverse=True):
        print(f"{pair:34s} {eff:8.4f} {goe:8.4f} {tx:7.4f} {qr:7.4f}")
    print(f"\nwrote {out / 'policy_pairs.csv'}")


if __name__ == "__main__":
    main()
