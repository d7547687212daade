"""Command-line front end.

Verbs: solve, simulate, sweep, estimate, export-map, env-serve. Every verb
writes a manifest (config hash, seed, package version, outputs) next to its
artifacts. Exit codes: 0 success, 2 configuration/usage problems, 3 runtime
failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .envserver import ProtocolError, serve_stdio
from .policies import extract_thresholds, lookup_map_json
from .simulator import (ConfigError, Engine, SimConfig, _probe_policies,
                        fit_from_engine, metrics_to_csv, run, solve_aa,
                        solve_sa, sweep)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config(args) -> SimConfig:
    if args.config:
        text = Path(args.config).read_text()
        cfg = SimConfig.from_json(text)
    else:
        cfg = SimConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _write_manifest(out_dir: Path, verb: str, cfg: SimConfig, outputs: list[str]):
    digest = hashlib.sha256(cfg.to_json().encode()).hexdigest()
    doc = {
        "verb": verb,
        "config_hash": digest,
        "seed": cfg.seed,
        "package_version": __version__,
        "artifact_versions": {"metrics_csv": 1, "lookup_map": 1,
                              "policy_solution": 1, "cmdp_model": 1},
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2))


def _parse_values(spec: str) -> list[float]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return [float(x) for x in range(int(lo), int(hi) + 1)]
    return [float(x) for x in spec.split(",") if x]


def _fit_for_solve(cfg: SimConfig):
    engine = Engine(cfg)
    sa_probe, aa_probe = _probe_policies(cfg)
    stats, log, _ = engine.run_phase(cfg.m_horizon, sa_probe, aa_probe,
                                     collect_log=True, collect_trace=False)
    estimates = fit_from_engine(engine, log, stats.window_open)
    return engine, estimates


def _solve_agent(cfg: SimConfig, agent: str):
    engine, estimates = _fit_for_solve(cfg)
    if agent == "sa":
        sol = solve_sa(engine, estimates)
        shape = (len(engine.src_levels), 2)
        axes = ("importance", "ack")
        values = {"importance": list(range(1, len(engine.src_levels) + 1)),
                  "ack": [0, 1]}
    else:
        sol = solve_aa(engine, estimates)
        shape = (len(engine.rcv_levels), engine.params.delta_max,
                 engine.params.theta_cap)
        axes = ("usefulness", "age", "lateness")
        values = {"usefulness": list(range(len(engine.rcv_levels))),
                  "age": list(range(1, engine.params.delta_max + 1)),
                  "lateness": list(range(1, engine.params.theta_cap + 1))}
    return engine, estimates, sol, shape, axes, values


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    agent = args.agent or "sa"
    engine, estimates, sol, shape, axes, values = _solve_agent(cfg, agent)
    low = sol.policy_low.reshape(shape)
    report = extract_thresholds(low, axes)
    print(f"agent: {agent}")
    print(f"multiplier: {sol.multiplier:.6g}")
    print(f"mix_prob: {sol.mix_prob:.6g}  deterministic: {sol.deterministic}")
    print(f"policy (component at the lower multiplier), axes {axes}:")
    print(low)
    if not sol.deterministic:
        print("policy (component at the upper multiplier):")
        print(sol.policy_high.reshape(shape))
    for name, th in report.per_axis.items():
        flat = np.asarray(th.thresholds).ravel()
        shown = ["inf" if not np.isfinite(x) else str(int(x)) for x in flat[:16]]
        print(f"threshold[{name}]: monotone={th.monotone} first={shown}")

    outputs = []
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "solution.json").write_text(sol.to_json())
        (out / "thresholds.json").write_text(report.to_json())
        (out / "estimates.json").write_text(estimates.to_json())
        outputs = ["solution.json", "thresholds.json", "estimates.json"]
        _write_manifest(out, "solve", cfg, outputs)

    if args.check_map:
        doc = json.loads(Path(args.check_map).read_text())
        if doc.get("format") != "lookup-map":
            print("check-map: not a lookup-map document", file=sys.stderr)
            return EXIT_RUNTIME
        want_low = np.array(doc["actions"]).reshape(shape)
        ok = (want_low == low).all()
        if "actions_high" in doc:
            want_high = np.array(doc["actions_high"]).reshape(shape)
            ok = ok and (want_high == sol.policy_high.reshape(shape)).all()
            ok = ok and abs(doc.get("mix_prob", 1.0) - sol.mix_prob) < 1e-6
        print(f"check-map: {'ok' if ok else 'MISMATCH'}")
        if not ok:
            return EXIT_RUNTIME
    return EXIT_OK


def _cmd_export_map(args) -> int:
    cfg = _load_config(args)
    agent = args.agent or "sa"
    _, _, sol, shape, axes, values = _solve_agent(cfg, agent)
    low = sol.policy_low.reshape(shape)
    if sol.deterministic:
        text = lookup_map_json(low, axes, values, agent)
    else:
        text = lookup_map_json(low, axes, values, agent,
                               table_high=sol.policy_high.reshape(shape),
                               mix_prob=sol.mix_prob)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"lookup_map_{agent}.json"
    path.write_text(text)
    _write_manifest(out, "export-map", cfg, [path.name])
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    result = run(cfg, collect_trace=bool(args.trace))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    outputs = ["metrics.csv"]
    (out / "metrics.csv").write_text(metrics_to_csv([result.metrics]))
    if result.estimates is not None:
        (out / "estimates.json").write_text(result.estimates.to_json())
        outputs.append("estimates.json")
    if args.trace:
        (out / "trace.csv").write_text(result.trace_csv())
        outputs.append("trace.csv")
    _write_manifest(out, "simulate", cfg, outputs)
    m = result.metrics
    print(f"{m.policy_pair} effectiveness={m.avg_effectiveness:.4f} "
          f"goe={m.avg_goe:.4f} tx={m.tx_rate:.4f} action={m.action_rate:.4f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not args.axis or not args.values:
        print("sweep needs --axis and --values", file=sys.stderr)
        return EXIT_CONFIG
    values = _parse_values(args.values)
    rows = sweep(cfg, args.axis, values)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(metrics_to_csv(rows))
    _write_manifest(out, "sweep", cfg, ["metrics.csv"])
    print(f"wrote {out / 'metrics.csv'} ({len(rows)} rows)")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _load_config(args)
    engine, estimates = _fit_for_solve(cfg)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "estimates.json").write_text(estimates.to_json())
    _write_manifest(out, "estimate", cfg, ["estimates.json"])
    print(f"wrote {out / 'estimates.json'}")
    return EXIT_OK


def _cmd_env_serve(args) -> int:
    cfg = _load_config(args)
    role = args.role or "sa"
    report = serve_stdio(cfg, role, episode_slots=args.episode_slots,
                         episodes=args.episodes)
    print(f"served {report.episodes} episodes / {report.slots} slots "
          f"total_reward={report.total_reward}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pushpull",
        description="Goal-oriented status-update simulator and policy solver")
    sub = ap.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a config JSON document")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed override")

    p = sub.add_parser("solve", parents=[common])
    p.add_argument("--agent", choices=("sa", "aa"))
    p.add_argument("--check-map", dest="check_map",
                   help="verify a lookup-map JSON against a fresh solve")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("simulate", parents=[common])
    p.add_argument("--trace", action="store_true",
                   help="also write the per-slot trace CSV")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--axis")
    p.add_argument("--values", help="comma list or a..b integer range")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("estimate", parents=[common])
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("export-map", parents=[common])
    p.add_argument("--agent", choices=("sa", "aa"))
    p.set_defaults(fn=_cmd_export_map)

    p = sub.add_parser("env-serve", parents=[common])
    p.add_argument("--role", choices=("sa", "aa"))
    p.add_argument("--episode-slots", type=int, default=512)
    p.add_argument("--episodes", type=int, default=1)
    p.set_defaults(fn=_cmd_env_serve)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
