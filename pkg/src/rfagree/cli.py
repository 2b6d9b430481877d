"""Command line front end.

Subcommands:

* ``run``    execute an experiment from a JSON config, write trials.jsonl,
             summary.json, report.csv (and transcript.jsonl with
             ``--transcript``); exit 0 on pass, 1 on threshold failure,
             2 on a configuration error.
* ``calc``   sizing and bound tables: given a network size, an overall
             success target, and an accuracy target (the 30-delta consensus
             diameter), print the per-link parameters and the minimal
             per-axis qubit count n.
* ``verify`` recompute metrics from exported trials.jsonl (and
             transcript.jsonl if given) and compare against the stored ones.
* ``sweep``  cartesian parameter sweeps over a base config; one summary per
             combination plus a combined report.csv.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys

from .config import ConfigError, ExperimentConfig
from .harness import emit_report, run_experiment, verify_records
from .quantum_link import required_qubits, ted_accuracy_bound, ted_success_bound

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _add_run_overrides(parser):
    parser.add_argument("--config", required=True, help="path to JSON experiment config")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--trials", type=int, help="override trial count")
    parser.add_argument("--out", help="override output directory")
    parser.add_argument("--jobs", type=int, help="override worker count")
    parser.add_argument(
        "--transcript", action="store_true", help="also export transcript.jsonl"
    )
    parser.add_argument("--m", type=int, help="override node count")
    parser.add_argument("--t", type=int, help="override fault bound")
    parser.add_argument("--n", type=int, help="override per-axis qubit count")
    parser.add_argument("--delta", type=float, help="override per-link accuracy")
    parser.add_argument("--epsilon", type=float, help="override depolarizing noise")
    parser.add_argument("--adversary", help="override adversary strategy name")


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        config.master_seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    if args.out is not None:
        config.out_dir = args.out
    if args.jobs is not None:
        config.jobs = args.jobs
    if args.transcript:
        config.write_transcript = True
    if args.m is not None:
        config.m = args.m
    if args.t is not None:
        config.t = args.t
    if args.n is not None:
        config.n = args.n
        config.q_target = None
    if args.delta is not None:
        config.delta = args.delta
    if args.epsilon is not None:
        config.epsilon = args.epsilon
    if args.adversary is not None:
        config.adversary = args.adversary
    config.validate()
    return config


def cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    config = _apply_overrides(config, args)
    summary, _, _ = run_experiment(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if summary["passed"] else EXIT_FAILED


def cmd_calc(args) -> int:
    if args.accuracy is not None:
        delta_eff = args.accuracy / 30.0
        delta = (delta_eff - 2.5 * args.epsilon) / (1.0 - args.epsilon) if args.epsilon < 1.0 else 0.0
        if delta <= 0.0:
            raise ConfigError(
                f"accuracy {args.accuracy} is unreachable at epsilon={args.epsilon}: "
                "the noise floor alone exceeds the per-link budget"
            )
    elif args.delta is not None:
        delta = args.delta
    else:
        raise ConfigError("one of --accuracy / --delta is required")

    if args.overall_success is not None:
        # Per-run success is per-link success to the m^2 power (every node
        # estimates every other node once per phase, and the deciding phase
        # includes the king's broadcast links).
        exponent = args.m * args.m
        q_link = args.overall_success ** (1.0 / exponent)
    elif args.q_target is not None:
        q_link = args.q_target
        exponent = 1
    else:
        raise ConfigError("one of --overall-success / --q-target is required")

    n = required_qubits(delta, q_link)
    out = {
        "m": args.m,
        "epsilon": args.epsilon,
        "delta": delta,
        "accuracy_bound": ted_accuracy_bound(delta, args.epsilon),
        "consensus_diameter": 30.0 * ted_accuracy_bound(delta, args.epsilon),
        "per_link_target": q_link,
        "per_link_exponent": exponent,
        "n": n,
        "per_link_success_bound": ted_success_bound(n, delta),
        "qubits_per_link": 3 * n,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    config = ExperimentConfig.load(args.config)
    mismatches = verify_records(args.records, args.transcript, config)
    if mismatches:
        for line in mismatches:
            print(line, file=sys.stderr)
        return EXIT_FAILED
    print(f"ok: {args.records} metrics verified")
    return EXIT_OK


def _parse_set(expr: str):
    key, _, values = expr.partition("=")
    if not values:
        raise ConfigError(f"--set expects key=v1,v2,..., got {expr!r}")
    parsed = []
    for raw in values.split(","):
        try:
            parsed.append(json.loads(raw))
        except json.JSONDecodeError:
            parsed.append(raw)
    return key, parsed


def cmd_sweep(args) -> int:
    base = ExperimentConfig.load(args.config)
    axes = [_parse_set(expr) for expr in args.set]
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    summaries = []
    failed = False
    for combo in itertools.product(*(values for _, values in axes)):
        data = base.to_dict()
        tag_parts = []
        for (key, _), value in zip(axes, combo):
            data[key] = value
            tag_parts.append(f"{key}{value}")
        tag = "_".join(tag_parts) or "base"
        data["out_dir"] = os.path.join(out_dir, tag)
        if args.seed is not None:
            data["master_seed"] = args.seed
        if args.trials is not None:
            data["trials"] = args.trials
        if args.jobs is not None:
            data["jobs"] = args.jobs
        config = ExperimentConfig.from_dict(data)
        summary, _, _ = run_experiment(config)
        summaries.append(summary)
        failed = failed or not summary["passed"]
        print(f"{tag}: violation_rate={summary['violation_rate']} passed={summary['passed']}")
    emit_report(summaries, os.path.join(out_dir, "report.csv"))
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfagree",
        description="Byzantine-tolerant reference frame agreement simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    _add_run_overrides(p_run)
    p_run.set_defaults(func=cmd_run)

    p_calc = sub.add_parser("calc", help="qubit budgets and success bounds")
    p_calc.add_argument("--m", type=int, required=True, help="network size")
    p_calc.add_argument("--overall-success", type=float, help="target for the whole run")
    p_calc.add_argument("--q-target", type=float, help="per-link target (alternative)")
    p_calc.add_argument("--accuracy", type=float, help="consensus diameter target (30 delta)")
    p_calc.add_argument("--delta", type=float, help="per-link accuracy (alternative)")
    p_calc.add_argument("--epsilon", type=float, default=0.0, help="depolarizing noise")
    p_calc.set_defaults(func=cmd_calc)

    p_verify = sub.add_parser("verify", help="recompute metrics from exported files")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--records", required=True, help="trials.jsonl path")
    p_verify.add_argument("--transcript", help="transcript.jsonl path (optional)")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="cartesian sweep over config fields")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--set", action="append", default=[], help="key=v1,v2,...")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--trials", type=int)
    p_sweep.add_argument("--jobs", type=int)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
