"""Models trained for 6 UEs tested on other UE counts, against matched models.

Single BS. Fewer test UEs than the model expects are zero-padded; more are
randomly down-selected to 6 each step.

    python scripts/ue_mismatch.py --test-ues 2 4 6 8 --seeds 1 2 3
"""

import argparse
import json
import logging

import numpy as np

from mmwave_ddqn.config import RunConfig
from mmwave_ddqn.harness import evaluate, train


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--train-ues", type=int, default=6)
    ap.add_argument("--test-ues", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--episodes", type=int, default=2000)
    ap.add_argument("--eval-episodes", type=int, default=100)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    def cfg_for(k, seed):
        return RunConfig(n_bs=1, n_ues=k, seed=seed, episodes=args.episodes, eval_episodes=args.eval_episodes)

    pretrained = {}
    for seed in args.seeds:
        logging.info("training K=%d seed=%d", args.train_ues, seed)
        pretrained[seed] = train(cfg_for(args.train_ues, seed)).agents

    table = {}
    for k in args.test_ues:
        pre, matched, exh = [], [], []
        for seed in args.seeds:
            cfg = cfg_for(k, seed)
            s_pre = evaluate(cfg.replace(train_n_ues=args.train_ues), pretrained[seed])
            if k == args.train_ues:
                s_match = s_pre
            else:
                logging.info("training K=%d seed=%d", k, seed)
                s_match = evaluate(cfg, train(cfg).agents)
            pre.append(s_pre["ddqn"]["mean"])
            matched.append(s_match["ddqn"]["mean"])
            exh.append(s_match["exhaustive"]["mean"])
        table[k] = {
            "pretrained": float(np.mean(pre)),
            "matched": float(np.mean(matched)),
            "exhaustive": float(np.mean(exh)),
            "pretrained_over_matched": float(np.mean(pre) / np.mean(matched)),
        }
        logging.info("K=%d %s", k, table[k])
    print(json.dumps(table, indent=2))


if __name__ == "__main__":
    main()
