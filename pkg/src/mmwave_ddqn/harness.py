"""Episode loop for distributed DDQN beam selection, plus evaluation and baselines.

Each time step: UEs move, links are drawn, the omni pilot phase fixes the
association, every BS agent picks a codeword from its own state, and all
rates are computed jointly. The exhaustive and random baselines are scored
on the same channel draw.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from mmwave_ddqn import ddqn
from mmwave_ddqn.channel import ArrayGeometry
from mmwave_ddqn.config import RunConfig
from mmwave_ddqn.ddqn import AgentBrain, build_state, fit_state_to_slots, layer_sizes
from mmwave_ddqn.environment import (
    BaseStation,
    Network,
    advance,
    beam_gains,
    dbm_to_watts,
    joint_index,
    make_codebook,
    omni_phase,
    per_bs_rates,
    random_policy,
    rates_for_actions,
    joint_actions,
    realize_links,
    spawn_episode,
)
from mmwave_ddqn.metrics import MetricsWriter, StepRecord
from mmwave_ddqn.rng import substream

log = logging.getLogger(__name__)


def build_network(cfg: RunConfig) -> Network:
    tx = ArrayGeometry.ula(cfg.n_tx, cfg.spacing_over_wavelength)
    bss = [
        BaseStation(j, np.array(cfg.bs_positions[j], dtype=float), dbm_to_watts(cfg.tx_power_dbm), tx)
        for j in range(cfg.n_bs)
    ]
    return Network(
        bss=bss,
        codebook=make_codebook(tx, cfg.codebook_size),
        rx_array=ArrayGeometry.ula(cfg.n_rx, cfg.spacing_over_wavelength),
        noise_w=dbm_to_watts(cfg.noise_dbm),
        params=cfg.propagation,
        half_length=cfg.half_length,
    )


def make_agents(cfg: RunConfig) -> list[AgentBrain]:
    sizes = layer_sizes(cfg.model_n_ues, cfg.memory_length, cfg.include_locations, cfg.codebook_size)
    return [
        AgentBrain.create(
            sizes,
            lr=cfg.learning_rate(j),
            init_rng=substream(cfg.seed, "agent", j, "init"),
            explore_rng=substream(cfg.seed, "agent", j, "explore"),
            replay_rng=substream(cfg.seed, "agent", j, "replay"),
            capacity=cfg.replay_capacity,
            gamma=cfg.gamma,
            batch_size=cfg.batch_size,
            sync_every=cfg.target_sync_steps,
            epsilon=cfg.epsilon_max,
        )
        for j in range(cfg.n_bs)
    ]


@dataclass
class Streams:
    mobility: np.random.Generator
    channel: np.random.Generator
    random_policy: np.random.Generator
    slots: np.random.Generator

    @classmethod
    def for_phase(cls, seed: int, phase: str) -> Streams:
        return cls(
            mobility=substream(seed, phase, "mobility"),
            channel=substream(seed, phase, "channel"),
            random_policy=substream(seed, phase, "random-policy"),
            slots=substream(seed, phase, "slots"),
        )


@dataclass
class Observation:
    """What the network knows at the start of a step, after the omni phase."""

    association: np.ndarray
    bs_omni: np.ndarray
    gains: np.ndarray
    states: list[np.ndarray]


def _observe(cfg, net, ues, streams, n_slots) -> Observation:
    links = realize_links(streams.channel, net, ues)
    omni = omni_phase(net, links, ues)
    memories = np.stack([ue.memory for ue in ues])
    positions = np.stack([ue.position for ue in ues])
    states = []
    for j in range(net.n_bs):
        mem, assoc, pos = fit_state_to_slots(memories, omni.association, positions, j, n_slots, streams.slots)
        states.append(
            build_state(mem, assoc, j, pos, cfg.include_locations, cfg.memory_length,
                        cfg.rate_scale, cfg.position_scale)
        )
    return Observation(omni.association, omni.bs_omni_rates, beam_gains(net, links), states)


@dataclass
class EpisodeResult:
    steps: int = 0
    sum_ddqn: list[float] = field(default_factory=list)
    sum_exhaustive: list[float] = field(default_factory=list)
    sum_random: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)


def run_episode(
    cfg: RunConfig,
    net: Network,
    agents: list[AgentBrain] | None,
    streams: Streams,
    episode: int,
    epsilon: float,
    learn: bool,
    emit: Callable[[StepRecord], None] | None = None,
    policy: str = "ddqn",
) -> EpisodeResult:
    """Run one episode until every UE leaves the streets (or ``max_steps``).

    ``policy="ddqn"`` acts with the agents; ``"exhaustive"`` and ``"random"``
    act without them (used by the baseline command), in which case the
    ``sum_ddqn`` series holds the chosen policy's sum-rate.
    """
    if policy not in ("ddqn", "exhaustive", "random"):
        raise ValueError(f"unknown policy {policy!r}")
    F, J = cfg.codebook_size, cfg.n_bs
    all_actions = joint_actions(F, J)
    ues = spawn_episode(
        streams.mobility, cfg.n_ues, cfg.memory_length, cfg.half_length,
        cfg.half_width, (cfg.speed_min, cfg.speed_max),
    )
    result = EpisodeResult()
    # UEs move at the start of every time step.
    if advance(ues, cfg.dt, cfg.half_length):
        return result
    n_slots = cfg.model_n_ues
    obs = _observe(cfg, net, ues, streams, n_slots)
    for t in range(cfg.max_steps):
        if policy == "ddqn":
            actions = np.array([agents[j].act(obs.states[j], epsilon) for j in range(J)])

        rates = rates_for_actions(obs.gains, obs.association, all_actions, net.noise_w)
        table = rates.sum(axis=1)
        best = int(np.argmax(table))
        rand_actions = random_policy(streams.random_policy, J, F)
        rand_idx = joint_index(rand_actions, F)
        if policy == "exhaustive":
            actions = all_actions[best]
        elif policy == "random":
            actions = rand_actions
        idx = joint_index(actions, F)
        bs_beam = per_bs_rates(rates[idx], obs.association, J)
        rewards = [ddqn.reward(bs_beam[j], obs.bs_omni[j], cfg.reward_mode) for j in range(J)]

        terminal = advance(ues, cfg.dt, cfg.half_length) or t + 1 >= cfg.max_steps
        next_obs = None if terminal else _observe(cfg, net, ues, streams, n_slots)

        losses: list[float | None] = [None] * J
        if learn:
            for j, agent in enumerate(agents):
                next_state = np.zeros_like(obs.states[j]) if terminal else next_obs.states[j]
                agent.replay.push(obs.states[j], actions[j], rewards[j], next_state, terminal)
                losses[j] = agent.train_step()

        result.steps += 1
        result.sum_ddqn.append(float(table[idx]))
        result.sum_exhaustive.append(float(table[best]))
        result.sum_random.append(float(table[rand_idx]))
        result.rewards.append(float(np.mean(rewards)))
        if emit is not None:
            for j in range(J):
                emit(StepRecord(
                    episode=episode, step=t, bs_id=j, action=int(actions[j]),
                    reward=float(rewards[j]), r_omni=float(obs.bs_omni[j]),
                    r_beam=float(bs_beam[j]), sum_ddqn=float(table[idx]),
                    sum_exhaustive=float(table[best]), sum_random=float(table[rand_idx]),
                    epsilon=float(epsilon), loss=losses[j],
                ))
        if terminal:
            break
        obs = next_obs
    return result


def _prepare_out(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def save_checkpoints(agents: list[AgentBrain], out: Path) -> None:
    for j, agent in enumerate(agents):
        agent.save(out / f"agent_{j}.ckpt")


def load_checkpoints(cfg: RunConfig, ckpt_dir: str | Path) -> list[AgentBrain]:
    agents = []
    expected = layer_sizes(cfg.model_n_ues, cfg.memory_length, cfg.include_locations, cfg.codebook_size)
    for j in range(cfg.n_bs):
        path = Path(ckpt_dir) / f"agent_{j}.ckpt"
        if not path.exists():
            raise FileNotFoundError(f"missing checkpoint {path}")
        agent = AgentBrain.load(path)
        if tuple(agent.online.sizes) != tuple(expected):
            raise ValueError(
                f"{path}: network sizes {agent.online.sizes} do not match config {expected}; "
                f"set train_n_ues to the UE count the model was trained for"
            )
        agents.append(agent)
    return agents


@dataclass
class TrainResult:
    agents: list[AgentBrain]
    episode_rewards: list[float]
    episode_sum_ddqn: list[float]
    episode_sum_exhaustive: list[float]
    episode_sum_random: list[float]
    epsilons: list[float]
    out_dir: Path | None


def train(cfg: RunConfig, out_dir: str | Path | None = None, progress: bool = False) -> TrainResult:
    """Train one agent per BS for ``cfg.episodes`` episodes.

    With an output directory, writes ``metrics.csv``, ``config.json`` and
    ``agent_<j>.ckpt`` (every ``checkpoint_every`` episodes and at the end).
    """
    net = build_network(cfg)
    agents = make_agents(cfg)
    streams = Streams.for_phase(cfg.seed, "train")
    out = _prepare_out(out_dir) if out_dir is not None else None
    writer = MetricsWriter(out / "metrics.csv") if out is not None else None
    if out is not None:
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2), encoding="utf-8")

    res = TrainResult(agents, [], [], [], [], [], out)
    try:
        for ep in range(cfg.episodes):
            eps = cfg.epsilon_at(ep)
            for agent in agents:
                agent.epsilon = eps
            r = run_episode(cfg, net, agents, streams, ep, eps, learn=True,
                            emit=writer.write if writer else None)
            res.epsilons.append(eps)
            res.episode_rewards.append(_mean(r.rewards))
            res.episode_sum_ddqn.append(_mean(r.sum_ddqn))
            res.episode_sum_exhaustive.append(_mean(r.sum_exhaustive))
            res.episode_sum_random.append(_mean(r.sum_random))
            if out is not None and (ep + 1) % cfg.checkpoint_every == 0:
                save_checkpoints(agents, out)
            if progress and (ep + 1) % max(1, cfg.episodes // 20) == 0:
                k = max(1, cfg.episodes // 20)
                log.info(
                    "episode %d/%d eps=%.3f reward=%.3f ddqn/exh=%.3f",
                    ep + 1, cfg.episodes, eps, np.mean(res.episode_rewards[-k:]),
                    np.mean(res.episode_sum_ddqn[-k:]) / max(np.mean(res.episode_sum_exhaustive[-k:]), 1e-12),
                )
    finally:
        if writer is not None:
            writer.close()
    if out is not None:
        save_checkpoints(agents, out)
    return res


def _mean(xs) -> float:
    return float(np.mean(xs)) if len(xs) else 0.0


def _summary(per_episode: dict[str, list[float]]) -> dict:
    out = {}
    for name, xs in per_episode.items():
        out[name] = {"mean": _mean(xs), "std": float(np.std(xs)) if xs else 0.0}
    return out


def evaluate(
    cfg: RunConfig,
    agents: list[AgentBrain] | str | Path,
    episodes: int | None = None,
    out_dir: str | Path | None = None,
) -> dict:
    """Greedy (epsilon = 0) evaluation on fresh episodes.

    Returns mean/std of the per-episode mean sum-rate for the DDQN policy and
    both baselines, plus the DDQN/exhaustive and DDQN/random ratios of the
    means. ``cfg.train_n_ues`` selects the network width when the model was
    trained for a different UE count.
    """
    if not isinstance(agents, list):
        agents = load_checkpoints(cfg, agents)
    net = build_network(cfg)
    streams = Streams.for_phase(cfg.seed, "eval")
    n = cfg.eval_episodes if episodes is None else episodes
    series = {"ddqn": [], "exhaustive": [], "random": []}
    for ep in range(n):
        r = run_episode(cfg, net, agents, streams, ep, 0.0, learn=False)
        if r.steps == 0:
            continue
        series["ddqn"].append(_mean(r.sum_ddqn))
        series["exhaustive"].append(_mean(r.sum_exhaustive))
        series["random"].append(_mean(r.sum_random))
    summary = _summary(series)
    summary["episodes"] = len(series["ddqn"])
    summary["n_ues"] = cfg.n_ues
    summary["train_n_ues"] = cfg.model_n_ues
    summary["ratio_ddqn_exhaustive"] = summary["ddqn"]["mean"] / summary["exhaustive"]["mean"]
    summary["ratio_ddqn_random"] = summary["ddqn"]["mean"] / summary["random"]["mean"]
    if out_dir is not None:
        out = _prepare_out(out_dir)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def baseline(cfg: RunConfig, episodes: int | None = None, out_dir: str | Path | None = None) -> dict:
    """Exhaustive-search and random-selection sum-rates, no learning involved."""
    net = build_network(cfg)
    streams = Streams.for_phase(cfg.seed, "eval")
    n = cfg.eval_episodes if episodes is None else episodes
    series = {"exhaustive": [], "random": []}
    for ep in range(n):
        r = run_episode(cfg, net, None, streams, ep, 0.0, learn=False, policy="exhaustive")
        if r.steps == 0:
            continue
        series["exhaustive"].append(_mean(r.sum_exhaustive))
        series["random"].append(_mean(r.sum_random))
    summary = _summary(series)
    summary["episodes"] = len(series["exhaustive"])
    summary["n_ues"] = cfg.n_ues
    summary["n_bs"] = cfg.n_bs
    if out_dir is not None:
        out = _prepare_out(out_dir)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary
