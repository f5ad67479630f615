"""Sum-rate versus number of UEs for one and two BSs.

Trains DDQN agents (with and without UE locations in the state) for each
(J, K) pair, evaluates them greedily, and reports them next to the
exhaustive-search and random-selection baselines.

    python scripts/sum_rate_vs_ues.py --ues 1 2 4 6 --bss 1 2 --episodes 2000 --out results/sum_rate.csv
"""

import argparse
import csv
import logging
import time
from pathlib import Path

from mmwave_ddqn.config import RunConfig
from mmwave_ddqn.harness import evaluate, train

FIELDS = ["n_bs", "n_ues", "seed", "locations", "ddqn", "exhaustive", "random", "ratio_ddqn_exhaustive", "seconds"]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--ues", type=int, nargs="+", default=[1, 2, 4, 6])
    ap.add_argument("--bss", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1])
    ap.add_argument("--episodes", type=int, default=2000)
    ap.add_argument("--eval-episodes", type=int, default=100)
    ap.add_argument("--out", default="results/sum_rate_vs_ues.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, FIELDS, lineterminator="\n")
        w.writeheader()
        for n_bs in args.bss:
            for k in args.ues:
                for seed in args.seeds:
                    for loc in (False, True):
                        cfg = RunConfig(n_bs=n_bs, n_ues=k, seed=seed, include_locations=loc,
                                        episodes=args.episodes, eval_episodes=args.eval_episodes)
                        t0 = time.time()
                        res = train(cfg)
                        s = evaluate(cfg, res.agents)
                        row = {
                            "n_bs": n_bs, "n_ues": k, "seed": seed, "locations": int(loc),
                            "ddqn": round(s["ddqn"]["mean"], 4),
                            "exhaustive": round(s["exhaustive"]["mean"], 4),
                            "random": round(s["random"]["mean"], 4),
                            "ratio_ddqn_exhaustive": round(s["ratio_ddqn_exhaustive"], 4),
                            "seconds": round(time.time() - t0, 1),
                        }
                        w.writerow(row)
                        fh.flush()
                        logging.info("%s", row)


if __name__ == "__main__":
    main()
