"""Distributed double-DQN beam selection for multi-BS mmWave networks."""

from mmwave_ddqn.channel import (
    ArrayGeometry,
    LinkRealization,
    PropagationParams,
    amplitude_path_loss,
    channel_matrix,
    los_probability,
    sample_shadowing,
    ula_response,
    upa_response,
)
from mmwave_ddqn.config import RunConfig, load_config

__all__ = [
    "ArrayGeometry",
    "LinkRealization",
    "PropagationParams",
    "RunConfig",
    "amplitude_path_loss",
    "channel_matrix",
    "load_config",
    "los_probability",
    "sample_shadowing",
    "ula_response",
    "upa_response",
]

__version__ = "0.1.0"
