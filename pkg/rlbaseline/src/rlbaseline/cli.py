"""Train or evaluate the DQN baseline against an env-serve endpoint."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from .dqn import (EVAL_HEADER, DqnConfig, evaluate, load_checkpoint,
                  save_checkpoint, train)
from .protocol import EnvProcess


def _episodes_for(steps: int, episode_slots: int) -> int:
    return max(1, -(-steps // episode_slots))


def _cmd_train(args) -> int:
    cfg = DqnConfig(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    episodes = _episodes_for(args.steps, args.episode_slots)
    with EnvProcess(args.config, args.role, args.episode_slots, episodes) as env:
        checkpoint, result = train(env.client, args.role, cfg, args.steps)
    ckpt_path = out / f"dqn_{args.role}.pt"
    save_checkpoint(checkpoint, ckpt_path)
    curve_path = out / "reward_curve.csv"
    with curve_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "return"])
        for i, ret in enumerate(result.episode_returns, 1):
            w.writerow([i, ret])
    print(f"trained {result.steps} steps over {len(result.episode_returns)} "
          f"episodes; wrote {ckpt_path} and {curve_path}")
    return 0


def _cmd_evaluate(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    role = checkpoint["role"]
    with EnvProcess(args.config, role, args.slots, 1) as env:
        row = evaluate(checkpoint, env.client, args.slots, seed=args.seed)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(EVAL_HEADER)
    w.writerow(row.csv_row())
    text = buf.getvalue()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rl_metrics.csv").write_text(text)
    print(text.strip())
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rlbaseline")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train")
    p.add_argument("--config", required=True, help="simulator config JSON")
    p.add_argument("--role", choices=("sa", "aa"), default="sa")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--episode-slots", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="rl_out")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--slots", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_evaluate)

    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
