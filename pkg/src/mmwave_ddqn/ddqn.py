"""Per-BS double-DQN agent on a three-layer numpy MLP trained with Adam."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mmwave_ddqn.environment import UNASSOCIATED


class ReplayNotReady(Exception):
    """Raised when a minibatch is requested from an underfilled buffer."""


# ---------------------------------------------------------------- network


@dataclass
class MlpParams:
    weights: list[np.ndarray]  # weights[l] has shape (fan_out, fan_in)
    biases: list[np.ndarray]

    @classmethod
    def init(cls, rng: np.random.Generator, sizes: tuple[int, ...]) -> MlpParams:
        """Glorot-uniform weights, zero biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @classmethod
    def zeros_like(cls, other: MlpParams) -> MlpParams:
        return cls([np.zeros_like(w) for w in other.weights], [np.zeros_like(b) for b in other.biases])

    def copy(self) -> MlpParams:
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def layer_sizes(n_ues: int, memory_length: int = 8, include_locations: bool = False, n_actions: int = 8):
    n_in = n_ues * memory_length + (2 * n_ues if include_locations else 0)
    return (n_in, 12 * n_ues, 8 * n_ues, n_actions)


def _relu(x):
    return np.maximum(x, 0.0)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Q-values for one state (1-D) or a batch of states (2-D, one per row)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.sizes[0]:
        raise ValueError(f"input width {x.shape[-1]} != network input {params.sizes[0]}")
    (w1, w2, w3), (b1, b2, b3) = params.weights, params.biases
    h1 = _relu(x @ w1.T + b1)
    h2 = _relu(h1 @ w2.T + b2)
    return h2 @ w3.T + b3


def loss_and_gradients(
    params: MlpParams, states: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> tuple[float, MlpParams]:
    """Mean squared TD error on the taken actions, and its gradient.

    Targets are treated as constants.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    B = states.shape[0]
    rows = np.arange(B)
    (w1, w2, w3), (b1, b2, b3) = params.weights, params.biases

    z1 = states @ w1.T + b1
    h1 = _relu(z1)
    z2 = h1 @ w2.T + b2
    h2 = _relu(z2)
    q = h2 @ w3.T + b3

    err = q[rows, actions] - targets
    loss = float(np.mean(err**2))

    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / B
    gw3 = dq.T @ h2
    gb3 = dq.sum(axis=0)
    dz2 = (dq @ w3) * (z2 > 0)
    gw2 = dz2.T @ h1
    gb2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2) * (z1 > 0)
    gw1 = dz1.T @ states
    gb1 = dz1.sum(axis=0)
    return loss, MlpParams([gw1, gw2, gw3], [gb1, gb2, gb3])


def ddqn_targets(
    rewards: np.ndarray,
    next_states: np.ndarray,
    terminals: np.ndarray,
    online: MlpParams,
    target: MlpParams,
    gamma: float,
) -> np.ndarray:
    """Double-DQN bootstrap: online net picks a', target net scores it."""
    rewards = np.asarray(rewards, dtype=float)
    terminals = np.asarray(terminals, dtype=bool)
    q_online = forward(online, next_states)
    q_target = forward(target, next_states)
    best = np.argmax(q_online, axis=1)
    bootstrap = q_target[np.arange(len(best)), best]
    return np.where(terminals, rewards, rewards + gamma * bootstrap)


# ---------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    m: MlpParams
    v: MlpParams
    step: int = 0

    @classmethod
    def zeros_like(cls, params: MlpParams) -> AdamState:
        return cls(MlpParams.zeros_like(params), MlpParams.zeros_like(params), 0)


def adam_step(
    params: MlpParams,
    grads: MlpParams,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> MlpParams:
    """Bias-corrected Adam update, applied in place; returns ``params``."""
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m.arrays(), state.v.arrays()):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params


# ---------------------------------------------------------------- policy pieces


def select_action(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over Q-values; greedy ties go to the lowest index.

    One uniform draw decides exploration; a second picks the random index
    only when exploring.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(q)))
    return int(np.argmax(q))


def reward(r_beam: float, r_omni: float, mode: str = "text") -> float:
    """Per-BS reward from beamformed and omni rate sums.

    ``mode="text"`` rewards the beamforming gain R_beam / R_omni; ``"algorithm"``
    uses the inverted ratio R_omni / R_beam for comparison runs.
    """
    if mode == "text":
        return r_beam / r_omni if r_omni > 0 else 0.0
    if mode == "algorithm":
        return r_omni / r_beam if r_beam > 0 else 0.0
    raise ValueError(f"unknown reward mode {mode!r}")


def build_state(
    memories: np.ndarray,
    association: np.ndarray,
    bs_id: int,
    positions: np.ndarray | None = None,
    include_locations: bool = False,
    memory_length: int | None = None,
    rate_scale: float = 20.0,
    position_scale: float = 50.0,
) -> np.ndarray:
    """State vector of BS ``bs_id``: scaled omni-rate histories of its UEs.

    ``memories`` is (K, T_m) in UE-id order. Rows of UEs served by another
    BS (or none) are zeroed. With locations, (x, y)/position_scale of each
    associated UE is appended after all histories.
    """
    memories = np.asarray(memories, dtype=float)
    if memory_length is not None and memories.shape[1] != memory_length:
        raise ValueError(f"memory length {memories.shape[1]} != {memory_length}")
    mask = (np.asarray(association) == bs_id)[:, None]
    hist = np.where(mask, np.clip(memories / rate_scale, 0.0, 1.0), 0.0)
    parts = [hist.ravel()]
    if include_locations:
        pos = np.asarray(positions, dtype=float) / position_scale
        parts.append(np.where(mask, pos, 0.0).ravel())
    return np.concatenate(parts)


def fit_state_to_slots(
    memories: np.ndarray,
    association: np.ndarray,
    positions: np.ndarray,
    bs_id: int,
    n_slots: int,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reshape UE tables to a network trained for ``n_slots`` UEs.

    Fewer UEs than slots: pad with unassociated zero rows. More UEs: keep
    ``n_slots`` of them, chosen at random with this BS's UEs first, in id
    order.
    """
    K = len(association)
    if K == n_slots:
        return memories, association, positions
    if K < n_slots:
        pad = n_slots - K
        return (
            np.vstack([memories, np.zeros((pad, memories.shape[1]))]),
            np.concatenate([association, np.full(pad, UNASSOCIATED)]),
            np.vstack([positions, np.zeros((pad, 2))]),
        )
    if rng is None:
        raise ValueError("down-selecting UEs needs an rng")
    own = np.flatnonzero(np.asarray(association) == bs_id)
    other = np.flatnonzero(np.asarray(association) != bs_id)
    own = rng.permutation(own)
    other = rng.permutation(other)
    keep = np.sort(np.concatenate([own, other])[:n_slots])
    return memories[keep], np.asarray(association)[keep], positions[keep]


# ---------------------------------------------------------------- replay


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions stored in preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action, reward, next_state, terminal) -> None:
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminals[i] = terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def order(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        start = (self._next - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def sample(self, rng: np.random.Generator, batch_size: int):
        if self._size < batch_size:
            raise ReplayNotReady(f"{self._size} transitions stored, need {batch_size}")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.terminals[idx],
        )


# ---------------------------------------------------------------- agent


@dataclass
class AgentBrain:
    online: MlpParams
    target: MlpParams
    adam: AdamState
    replay: ReplayBuffer
    lr: float
    gamma: float = 0.95
    batch_size: int = 32
    sync_every: int = 200
    epsilon: float = 0.9
    gradient_steps: int = 0
    explore_rng: np.random.Generator = field(default_factory=np.random.default_rng)
    replay_rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @classmethod
    def create(
        cls,
        sizes,
        lr: float,
        init_rng: np.random.Generator,
        explore_rng: np.random.Generator,
        replay_rng: np.random.Generator,
        capacity: int = 10_000,
        **kwargs,
    ) -> AgentBrain:
        online = MlpParams.init(init_rng, tuple(sizes))
        return cls(
            online=online,
            target=online.copy(),
            adam=AdamState.zeros_like(online),
            replay=ReplayBuffer(capacity, sizes[0]),
            lr=lr,
            explore_rng=explore_rng,
            replay_rng=replay_rng,
            **kwargs,
        )

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return forward(self.online, state)

    def act(self, state: np.ndarray, epsilon: float | None = None) -> int:
        eps = self.epsilon if epsilon is None else epsilon
        return select_action(self.q_values(state), eps, self.explore_rng)

    def sync_target(self) -> None:
        self.target = self.online.copy()

    def train_step(self) -> float | None:
        """One minibatch update; ``None`` while the buffer is still warming up."""
        try:
            s, a, r, s2, done = self.replay.sample(self.replay_rng, self.batch_size)
        except ReplayNotReady:
            return None
        y = ddqn_targets(r, s2, done, self.online, self.target, self.gamma)
        loss, grads = loss_and_gradients(self.online, s, a, y)
        adam_step(self.online, grads, self.adam, self.lr)
        self.gradient_steps += 1
        if self.gradient_steps % self.sync_every == 0:
            self.sync_target()
        return loss

    # -- checkpointing

    def to_dict(self) -> dict:
        def pack(p: MlpParams):
            return {
                "weights": [w.tolist() for w in p.weights],
                "biases": [b.tolist() for b in p.biases],
            }

        order = self.replay.order()
        return {
            "format": "mmwave-ddqn-agent/1",
            "sizes": list(self.online.sizes),
            "online": pack(self.online),
            "target": pack(self.target),
            "adam": {"m": pack(self.adam.m), "v": pack(self.adam.v), "step": self.adam.step},
            "lr": self.lr,
            "gamma": self.gamma,
            "batch_size": self.batch_size,
            "sync_every": self.sync_every,
            "epsilon": self.epsilon,
            "gradient_steps": self.gradient_steps,
            "replay": {
                "capacity": self.replay.capacity,
                "states": self.replay.states[order].tolist(),
                "actions": self.replay.actions[order].tolist(),
                "rewards": self.replay.rewards[order].tolist(),
                "next_states": self.replay.next_states[order].tolist(),
                "terminals": self.replay.terminals[order].tolist(),
            },
            "rng": {
                "explore": self.explore_rng.bit_generator.state,
                "replay": self.replay_rng.bit_generator.state,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> AgentBrain:
        def unpack(p) -> MlpParams:
            return MlpParams(
                [np.array(w, dtype=float) for w in p["weights"]],
                [np.array(b, dtype=float) for b in p["biases"]],
            )

        online = unpack(d["online"])
        rep = d["replay"]
        replay = ReplayBuffer(rep["capacity"], online.sizes[0])
        for row in zip(rep["states"], rep["actions"], rep["rewards"], rep["next_states"], rep["terminals"]):
            replay.push(*row)
        rngs = []
        for key in ("explore", "replay"):
            g = np.random.Generator(np.random.PCG64())
            g.bit_generator.state = d["rng"][key]
            rngs.append(g)
        return cls(
            online=online,
            target=unpack(d["target"]),
            adam=AdamState(unpack(d["adam"]["m"]), unpack(d["adam"]["v"]), int(d["adam"]["step"])),
            replay=replay,
            lr=float(d["lr"]),
            gamma=float(d["gamma"]),
            batch_size=int(d["batch_size"]),
            sync_every=int(d["sync_every"]),
            epsilon=float(d["epsilon"]),
            gradient_steps=int(d["gradient_steps"]),
            explore_rng=rngs[0],
            replay_rng=rngs[1],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> AgentBrain:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
