"""Two-street mobility world, pilot association, codebook, and rate evaluation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from mmwave_ddqn.channel import (
    ArrayGeometry,
    LinkRealization,
    PropagationParams,
    channel_matrix,
    draw_link,
    ula_response,
)

UNASSOCIATED = -1


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass
class BaseStation:
    id: int
    position: np.ndarray
    tx_power_w: float
    array: ArrayGeometry

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if not self.tx_power_w > 0:
            raise ValueError(f"BS {self.id}: tx power must be positive")


@dataclass
class UserEquipment:
    id: int
    position: np.ndarray
    velocity: np.ndarray
    street: int  # 0: along x, 1: along y
    memory: np.ndarray
    active: bool = True

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.velocity))

    def push_memory(self, rate: float) -> None:
        self.memory[:-1] = self.memory[1:]
        self.memory[-1] = rate


@dataclass(frozen=True)
class Codebook:
    angles: np.ndarray
    entries: np.ndarray  # (size, N_t)

    def __len__(self) -> int:
        return len(self.angles)


def make_codebook(array: ArrayGeometry, size: int = 8) -> Codebook:
    """Steering vectors at angles evenly spaced over (-pi/2, pi/2)."""
    angles = -np.pi / 2 + np.pi * (np.arange(size) + 0.5) / size
    entries = np.stack([ula_response(array, a) for a in angles])
    return Codebook(angles=angles, entries=entries)


@dataclass
class Network:
    """Static part of the world: base stations, codebook, receiver array, noise."""

    bss: list[BaseStation]
    codebook: Codebook
    rx_array: ArrayGeometry
    noise_w: float
    params: PropagationParams = field(default_factory=PropagationParams)
    half_length: float = 50.0

    @property
    def n_bs(self) -> int:
        return len(self.bss)

    @property
    def tx_power(self) -> np.ndarray:
        return np.array([bs.tx_power_w for bs in self.bss])


def spawn_episode(
    rng: np.random.Generator,
    n_ues: int,
    memory_length: int = 8,
    half_length: float = 50.0,
    half_width: float = 4.0,
    speed_range: tuple[float, float] = (2.0, 5.0),
) -> list[UserEquipment]:
    if n_ues < 1:
        raise ValueError("need at least one UE")
    lo, hi = speed_range
    ues = []
    for k in range(n_ues):
        street = int(rng.integers(2))
        direction = 1.0 if rng.random() < 0.5 else -1.0
        offset = rng.uniform(-half_width, half_width)
        speed = rng.uniform(lo, hi) if hi > lo else float(lo)
        along = -direction * half_length
        if street == 0:
            pos, vel = [along, offset], [direction * speed, 0.0]
        else:
            pos, vel = [offset, along], [0.0, direction * speed]
        ues.append(
            UserEquipment(
                id=k,
                position=np.array(pos),
                velocity=np.array(vel),
                street=street,
                memory=np.zeros(memory_length),
            )
        )
    return ues


def advance(ues: list[UserEquipment], dt: float = 1.0, half_length: float = 50.0) -> bool:
    """Move every active UE by one step; return True once none is active."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    for ue in ues:
        if not ue.active:
            continue
        ue.position = ue.position + ue.velocity * dt
        if abs(ue.position[ue.street]) > half_length:
            ue.active = False
    return not any(ue.active for ue in ues)


@dataclass
class Links:
    """Per-step channel table. Rows are BSs, columns UEs; inactive UEs hold None."""

    realizations: list[list[LinkRealization | None]]
    channels: np.ndarray  # (J, K, N_r, N_t), zero for inactive UEs
    active: np.ndarray  # (K,) bool


def realize_links(
    rng: np.random.Generator, net: Network, ues: list[UserEquipment]
) -> Links:
    n_t = net.bss[0].array.size
    n_r = net.rx_array.size
    J, K = net.n_bs, len(ues)
    channels = np.zeros((J, K, n_r, n_t), dtype=complex)
    table: list[list[LinkRealization | None]] = [[None] * K for _ in range(J)]
    for j, bs in enumerate(net.bss):
        for k, ue in enumerate(ues):
            if not ue.active:
                continue
            dx, dy = ue.position - bs.position
            r = math.hypot(dx, dy)
            # ULA on the y axis: broadside points along x.
            aod = math.atan2(dy, dx)
            aoa = math.atan2(-dy, -dx)
            link = draw_link(rng, r, aod, aoa, net.params)
            table[j][k] = link
            channels[j, k] = channel_matrix(link, bs.array, net.rx_array)
    active = np.array([ue.active for ue in ues], dtype=bool)
    return Links(realizations=table, channels=channels, active=active)


@dataclass
class OmniResult:
    pilot_powers: np.ndarray  # (J, K) watts
    omni_rates: np.ndarray  # (K,) bits/s/Hz
    association: np.ndarray  # (K,) serving BS index or UNASSOCIATED
    bs_omni_rates: np.ndarray  # (J,) sum of associated UEs' omni rates


def omni_phase(net: Network, links: Links, ues: list[UserEquipment] | None = None) -> OmniResult:
    """Pilot sub-slot with unit array gain: associate each UE and compute omni rates.

    When ``ues`` is given, each UE's omni-rate memory is pushed (0 for
    inactive UEs).
    """
    J, K = net.n_bs, len(links.active)
    pilots = np.zeros((J, K))
    for j, bs in enumerate(net.bss):
        for k in range(K):
            link = links.realizations[j][k]
            if link is None:
                continue
            pilots[j, k] = (
                bs.tx_power_w
                * abs(link.complex_gain) ** 2
                * link.shadow_factor
                / link.amplitude_path_loss**2
            )
    association = np.full(K, UNASSOCIATED, dtype=int)
    omni = np.zeros(K)
    for k in range(K):
        if not links.active[k]:
            continue
        s = int(np.argmax(pilots[:, k]))
        association[k] = s
        interference = pilots[:, k].sum() - pilots[s, k]
        omni[k] = math.log2(1.0 + pilots[s, k] / (net.noise_w + interference))
    bs_omni = np.zeros(J)
    for k in range(K):
        if association[k] != UNASSOCIATED:
            bs_omni[association[k]] += omni[k]
    if ues is not None:
        for k, ue in enumerate(ues):
            ue.push_memory(omni[k])
    return OmniResult(pilots, omni, association, bs_omni)


def beam_gains(net: Network, links: Links) -> np.ndarray:
    """Received power P_j * ||H_kj v_f||^2 for every (UE k, BS j, codeword f).

    For a single receive antenna this equals the determinant of
    H v v^H H^H, which is a 1x1 matrix.
    """
    # channels (J, K, N_r, N_t) @ entries^T (N_t, F) -> (J, K, N_r, F)
    hv = links.channels @ net.codebook.entries.T
    power = np.sum(np.abs(hv) ** 2, axis=2)  # (J, K, F)
    power *= net.tx_power[:, None, None]
    return np.transpose(power, (1, 0, 2))  # (K, J, F)


def rates_for_actions(
    gains: np.ndarray, association: np.ndarray, actions: np.ndarray, noise_w: float
) -> np.ndarray:
    """Per-UE rates for a batch of joint actions.

    ``actions`` has shape (M, J); returns (M, K). Unassociated UEs get 0.
    """
    actions = np.atleast_2d(np.asarray(actions, dtype=int))
    K, J, F = gains.shape
    if actions.shape[1] != J:
        raise ValueError(f"expected {J} actions per joint choice, got {actions.shape[1]}")
    if actions.size and (actions.min() < 0 or actions.max() >= F):
        raise IndexError(f"action index outside codebook of size {F}")
    # received[m, k, i] = P_i ||H_ki v_{a_i}||^2
    received = np.stack([gains[:, i, actions[:, i]].T for i in range(J)], axis=2)
    M = actions.shape[0]
    rates = np.zeros((M, K))
    for k in range(K):
        s = association[k]
        if s == UNASSOCIATED:
            continue
        interference = np.zeros(M)
        for i in range(J):
            if i != s:
                interference = interference + received[:, k, i]
        rates[:, k] = np.log2(1.0 + received[:, k, s] / (noise_w + interference))
    return rates


def per_bs_rates(rates: np.ndarray, association: np.ndarray, n_bs: int) -> np.ndarray:
    """Sum UE rates by serving BS along the last axis."""
    rates = np.asarray(rates)
    out = np.zeros(rates.shape[:-1] + (n_bs,))
    for k, s in enumerate(association):
        if s != UNASSOCIATED:
            out[..., s] += rates[..., k]
    return out


def beamformed_rates(
    net: Network, links: Links, association: np.ndarray, actions
) -> tuple[np.ndarray, np.ndarray]:
    """Per-UE rates and per-BS rate sums for one joint action."""
    gains = beam_gains(net, links)
    rates = rates_for_actions(gains, association, np.asarray(actions)[None, :], net.noise_w)[0]
    return rates, per_bs_rates(rates, association, net.n_bs)


def sum_rate(rates) -> float:
    return float(np.sum(rates)) if len(rates) else 0.0


def joint_actions(n_codewords: int, n_bs: int) -> np.ndarray:
    """All joint codeword assignments in lexicographic order, shape (F**J, J)."""
    return np.array(list(itertools.product(range(n_codewords), repeat=n_bs)), dtype=int)


def sum_rate_table(gains: np.ndarray, association: np.ndarray, noise_w: float) -> np.ndarray:
    """Sum-rate of every joint action, indexed like :func:`joint_actions`."""
    K, J, F = gains.shape
    rates = rates_for_actions(gains, association, joint_actions(F, J), noise_w)
    return rates.sum(axis=1)


def joint_index(actions, n_codewords: int) -> int:
    """Row of ``actions`` in the lexicographic joint-action table."""
    idx = 0
    for a in actions:
        idx = idx * n_codewords + int(a)
    return idx


def exhaustive_best(
    gains: np.ndarray, association: np.ndarray, noise_w: float
) -> tuple[tuple[int, ...], float]:
    """Joint codeword assignment maximizing the sum-rate (perfect CSI).

    Ties go to the lexicographically smallest tuple.
    """
    K, J, F = gains.shape
    table = sum_rate_table(gains, association, noise_w)
    best = int(np.argmax(table))
    return tuple(int(a) for a in joint_actions(F, J)[best]), float(table[best])


def random_policy(rng: np.random.Generator, n_bs: int, n_codewords: int) -> np.ndarray:
    return rng.integers(n_codewords, size=n_bs)
