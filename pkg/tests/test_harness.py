import json

import numpy as np
import pytest

from mmwave_ddqn.config import RunConfig
from mmwave_ddqn.harness import Streams, baseline, build_network, evaluate, run_episode, train
from mmwave_ddqn.metrics import read_metrics


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = RunConfig(n_bs=2, n_ues=3, episodes=12, checkpoint_every=5, seed=3, eval_episodes=4)
    res = train(cfg, out)
    return cfg, res, out


def test_single_ue_fixed_speed_runs_fifty_steps(tmp_path):
    cfg = RunConfig(n_bs=1, n_ues=1, episodes=1, speed_min=2.0, speed_max=2.0, seed=0)
    train(cfg, tmp_path)
    recs = read_metrics(tmp_path / "metrics.csv")
    assert len(recs) == 50
    assert [r.step for r in recs] == list(range(50))


def test_outputs_written(small_run):
    cfg, res, out = small_run
    assert (out / "agent_0.ckpt").exists() and (out / "agent_1.ckpt").exists()
    assert json.loads((out / "config.json").read_text())["n_ues"] == 3
    recs = read_metrics(out / "metrics.csv")
    steps = {(r.episode, r.step) for r in recs}
    assert len(recs) == len(steps) * cfg.n_bs
    assert {r.episode for r in recs} == set(range(cfg.episodes))


def test_oracle_dominance_on_every_record(small_run):
    _, _, out = small_run
    for r in read_metrics(out / "metrics.csv"):
        assert r.sum_exhaustive >= r.sum_ddqn
        assert r.sum_exhaustive >= r.sum_random
        assert r.sum_random >= 0 and r.reward >= 0


def test_no_loss_before_warmup(small_run):
    cfg, _, out = small_run
    seen = {j: 0 for j in range(cfg.n_bs)}
    for r in read_metrics(out / "metrics.csv"):
        seen[r.bs_id] += 1
        if seen[r.bs_id] < cfg.batch_size:
            assert r.loss is None
        else:
            assert r.loss is not None


def test_epsilon_non_increasing(small_run):
    _, res, _ = small_run
    assert all(a >= b for a, b in zip(res.epsilons, res.epsilons[1:]))
    assert all(0.1 - 1e-12 <= e <= 0.9 for e in res.epsilons)


def test_training_is_byte_reproducible(small_run, tmp_path):
    cfg, _, out = small_run
    train(cfg, tmp_path)
    assert (tmp_path / "metrics.csv").read_bytes() == (out / "metrics.csv").read_bytes()
    for j in range(cfg.n_bs):
        assert (tmp_path / f"agent_{j}.ckpt").read_bytes() == (out / f"agent_{j}.ckpt").read_bytes()


def test_locations_do_not_perturb_environment(tmp_path):
    base = RunConfig(n_bs=1, n_ues=2, episodes=3, seed=4)
    a = train(base, tmp_path / "a")
    b = train(base.replace(include_locations=True), tmp_path / "b")
    ra, rb = read_metrics(tmp_path / "a" / "metrics.csv"), read_metrics(tmp_path / "b" / "metrics.csv")
    assert [r.sum_exhaustive for r in ra] == [r.sum_exhaustive for r in rb]
    assert [r.sum_random for r in ra] == [r.sum_random for r in rb]


def test_evaluate_deterministic_and_writes_summary(small_run, tmp_path):
    cfg, _, out = small_run
    s1 = evaluate(cfg, out, out_dir=tmp_path)
    s2 = evaluate(cfg, out)
    assert s1 == s2
    assert json.loads((tmp_path / "summary.json").read_text()) == s1
    assert s1["exhaustive"]["mean"] >= s1["ddqn"]["mean"]
    assert s1["exhaustive"]["mean"] >= s1["random"]["mean"]
    assert s1["ratio_ddqn_exhaustive"] == pytest.approx(s1["ddqn"]["mean"] / s1["exhaustive"]["mean"])


def test_evaluate_missing_checkpoint(tmp_path):
    with pytest.raises(FileNotFoundError):
        evaluate(RunConfig(n_bs=1), tmp_path)


def test_evaluate_shape_mismatch_needs_train_n_ues(small_run):
    cfg, _, out = small_run
    with pytest.raises(ValueError, match="train_n_ues"):
        evaluate(cfg.replace(n_ues=2), out)


@pytest.mark.parametrize("k_test", [1, 2, 5])
def test_evaluate_with_other_ue_count(small_run, k_test):
    cfg, _, out = small_run
    s = evaluate(cfg.replace(n_ues=k_test, train_n_ues=3), out, episodes=3)
    assert s["n_ues"] == k_test and s["train_n_ues"] == 3
    assert s["exhaustive"]["mean"] >= s["ddqn"]["mean"]


def test_mismatch_states_padded_or_downselected():
    from mmwave_ddqn.harness import _observe
    from mmwave_ddqn.environment import advance, spawn_episode

    for k_test, expected_nonzero in [(4, 4), (8, 6)]:
        cfg = RunConfig(n_bs=1, n_ues=k_test, train_n_ues=6, seed=1)
        net = build_network(cfg)
        streams = Streams.for_phase(1, "eval")
        ues = spawn_episode(streams.mobility, k_test)
        for ue in ues:
            ue.velocity[:] = 0.0
            ue.memory[:] = 1.0
        advance(ues)
        obs = _observe(cfg, net, ues, streams, 6)
        s = obs.states[0]
        assert s.shape == (48,)
        rows = s.reshape(6, 8)
        assert np.count_nonzero(rows.any(axis=1)) == expected_nonzero
        if k_test == 4:
            assert not rows[4:].any()


def test_baseline_summary(tmp_path):
    cfg = RunConfig(n_bs=2, n_ues=2, seed=5)
    s = baseline(cfg, episodes=5, out_dir=tmp_path)
    assert s["episodes"] == 5
    assert s["exhaustive"]["mean"] > s["random"]["mean"] > 0
    assert (tmp_path / "summary.json").exists()


def test_run_episode_rejects_unknown_policy():
    cfg = RunConfig(n_bs=1, n_ues=1)
    with pytest.raises(ValueError):
        run_episode(cfg, build_network(cfg), None, Streams.for_phase(0, "x"), 0, 0.0, False, policy="greedy")


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        train(RunConfig(n_bs=1, episodes=1), blocker / "sub")
