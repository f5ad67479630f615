"""How much of the exhaustive-search sum-rate is reachable from the agent's state.

Because actions never change the next state, the best any agent can do is act
greedily on E[sum-rate | state, action]. This fits a large regressor to that
quantity on simulated data (all BSs' states concatenated, so it also bounds
the decentralized agents) and scores its argmax policy on held-out episodes.

Needs scikit-learn (``pip install scikit-learn``).

    python scripts/observation_ceiling.py --bss 1 --ues 2
    python scripts/observation_ceiling.py --bss 1 --ues 2 --locations
"""

import argparse

import numpy as np
from sklearn.neural_network import MLPRegressor

from mmwave_ddqn.config import RunConfig
from mmwave_ddqn.environment import advance, joint_actions, rates_for_actions, spawn_episode
from mmwave_ddqn.harness import Streams, _observe, build_network


def collect(cfg, n_episodes, seed):
    net = build_network(cfg)
    streams = Streams.for_phase(seed, "ceiling")
    actions = joint_actions(cfg.codebook_size, cfg.n_bs)
    X, Y = [], []
    for _ in range(n_episodes):
        ues = spawn_episode(streams.mobility, cfg.n_ues, cfg.memory_length, cfg.half_length,
                            cfg.half_width, (cfg.speed_min, cfg.speed_max))
        if advance(ues, cfg.dt, cfg.half_length):
            continue
        for _ in range(cfg.max_steps):
            obs = _observe(cfg, net, ues, streams, cfg.n_ues)
            X.append(np.concatenate(obs.states))
            Y.append(rates_for_actions(obs.gains, obs.association, actions, net.noise_w).sum(axis=1))
            if advance(ues, cfg.dt, cfg.half_length):
                break
    return np.array(X), np.array(Y)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--bss", type=int, default=1)
    ap.add_argument("--ues", type=int, default=2)
    ap.add_argument("--locations", action="store_true")
    ap.add_argument("--train-episodes", type=int, default=5000)
    ap.add_argument("--test-episodes", type=int, default=800)
    args = ap.parse_args()

    cfg = RunConfig(n_bs=args.bss, n_ues=args.ues, include_locations=args.locations)
    X_tr, Y_tr = collect(cfg, args.train_episodes, 1)
    X_te, Y_te = collect(cfg, args.test_episodes, 2)
    model = MLPRegressor(hidden_layer_sizes=(128, 128), max_iter=60, early_stopping=True, random_state=0)
    model.fit(X_tr, Y_tr)
    picked = Y_te[np.arange(len(Y_te)), model.predict(X_te).argmax(axis=1)]
    best = Y_te.max(axis=1).mean()
    print(f"samples: {len(X_tr)} train / {len(X_te)} test")
    print(f"state-greedy ceiling  : {picked.mean() / best:.3f} of exhaustive")
    print(f"best single fixed beam: {Y_te.mean(axis=0).max() / best:.3f}")
    print(f"random selection      : {Y_te.mean() / best:.3f}")


if __name__ == "__main__":
    main()
