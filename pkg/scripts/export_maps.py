#!/usr/bin/env python3
"""Export the solved decision lookup maps for both agents at two budgets.

    python3 scripts/export_maps.py --out results/maps
"""

import argparse
import json
from pathlib import Path

from pushpull.cli import main as cli_main
from pushpull.simulator import SimConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budgets", default="0.06,0.08")
    ap.add_argument("--m-horizon", type=int, default=50_000)
    ap.add_argument("--out", default="results/maps")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for budget in (float(b) for b in args.budgets.split(",")):
        cfg = SimConfig(m_horizon=args.m_horizon, n_horizon=1, seed=17,
                        c_alpha_max=budget, c_beta_max=budget)
        cfg_path = out / f"config_{budget:.2f}.json"
        cfg_path.write_text(cfg.to_json())
        for agent in ("sa", "aa"):
            sub = out / f"c{budget:.2f}_{agent}"
            code = cli_main(["export-map", "--config", str(cfg_path),
                             "--agent", agent, "--out", str(sub)])
            assert code == 0, f"export failed for {agent} at {budget}"
            doc = json.loads((sub / f"lookup_map_{agent}.json").read_text())
            n_on = sum(doc["actions"])
            print(f"budget {budget:.2f} {agent}: {n_on}/{len(doc['actions'])} "
                  f"cells active" + ("" if "mix_prob" not in doc
                                     else f" (mixture eta={doc['mix_prob']:.3f})"))


if __name__ == "__main__":
    main()
