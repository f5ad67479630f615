"""Command line: ``mmwave-ddqn {train,eval,baseline}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from mmwave_ddqn.config import ConfigError, load_config
from mmwave_ddqn.harness import baseline, evaluate, train


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwave-ddqn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "train one DDQN agent per base station"),
        ("eval", "greedy evaluation of saved agents against both baselines"),
        ("baseline", "exhaustive-search and random-selection sum-rates only"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config; omitted fields use defaults")
        p.add_argument("--seed", type=_seed)
        p.add_argument("--out", help="output directory")
        p.add_argument("--episodes", type=int,
                       help="training episodes (train) or evaluation episodes (eval, baseline)")
        p.add_argument("--locations", type=_bool, help="append UE locations to the state")
        p.add_argument("--reward-mode", choices=["text", "algorithm"])
        p.add_argument("--ues", type=int, help="number of UEs")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "eval":
            p.add_argument("--checkpoints", help="directory holding agent_<j>.ckpt (default: --out)")
            p.add_argument("--train-ues", type=int, help="UE count the checkpoints were trained for")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    overrides = {
        "seed": args.seed,
        "out_dir": args.out,
        "include_locations": args.locations,
        "reward_mode": args.reward_mode,
        "n_ues": args.ues,
    }
    if args.command == "train":
        overrides["episodes"] = args.episodes
    else:
        overrides["eval_episodes"] = args.episodes
    if args.command == "eval":
        overrides["train_n_ues"] = args.train_ues
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "train":
            res = train(cfg, cfg.out_dir, progress=args.verbose)
            print(json.dumps({
                "out_dir": str(res.out_dir),
                "episodes": cfg.episodes,
                "final_epsilon": res.epsilons[-1] if res.epsilons else None,
            }))
        elif args.command == "eval":
            summary = evaluate(cfg, args.checkpoints or cfg.out_dir, out_dir=cfg.out_dir)
            print(json.dumps(summary, indent=2))
        else:
            summary = baseline(cfg, out_dir=cfg.out_dir)
            print(json.dumps(summary, indent=2))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
