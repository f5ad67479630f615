"""Single-path mmWave link model: array responses, LOS draw, path loss, shadowing.

Angles are in radians and measured from the array broadside. Distances are
2-D horizontal distances in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ULA_Y = "ULA_Y"
UPA_YZ = "UPA_YZ"

LOS = "LOS"
NLOS = "NLOS"


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna array layout.

    ``n_elements`` is an int for a ULA along y, or ``(w, h)`` for a planar
    array in the yz-plane (w elements along y, h along z).
    """

    kind: str
    n_elements: int | tuple[int, int]
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.kind == ULA_Y:
            if int(self.n_elements) < 1:
                raise ValueError(f"ULA needs at least one element, got {self.n_elements}")
        elif self.kind == UPA_YZ:
            w, h = self.n_elements
            if w < 1 or h < 1:
                raise ValueError(f"UPA needs w, h >= 1, got {self.n_elements}")
        else:
            raise ValueError(f"unknown array kind {self.kind!r}")
        if not self.spacing_over_wavelength > 0:
            raise ValueError("element spacing must be positive")

    @classmethod
    def ula(cls, n: int, spacing_over_wavelength: float = 0.5) -> ArrayGeometry:
        return cls(ULA_Y, int(n), spacing_over_wavelength)

    @classmethod
    def upa(cls, w: int, h: int, spacing_over_wavelength: float = 0.5) -> ArrayGeometry:
        return cls(UPA_YZ, (int(w), int(h)), spacing_over_wavelength)

    @property
    def size(self) -> int:
        if self.kind == ULA_Y:
            return int(self.n_elements)
        w, h = self.n_elements
        return w * h


@dataclass(frozen=True)
class PropagationParams:
    """Large-scale propagation constants (dB quantities referenced to 1 m)."""

    kappa_los_db: float = 61.4
    kappa_nlos_db: float = 72.0
    alpha_los: float = 2.0
    alpha_nlos: float = 3.3
    sigma_v_los_db: float = 5.8
    sigma_v_nlos_db: float = 8.7
    mu_v_db: float = 0.0
    nlos_angle_spread_deg: float = 15.0

    def __post_init__(self):
        if self.alpha_los <= 0 or self.alpha_nlos <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.sigma_v_los_db < 0 or self.sigma_v_nlos_db < 0:
            raise ValueError("shadowing std devs must be non-negative")
        if self.nlos_angle_spread_deg < 0:
            raise ValueError("nlos_angle_spread_deg must be non-negative")


@dataclass(frozen=True)
class LinkRealization:
    link_state: str
    complex_gain: complex
    amplitude_path_loss: float
    shadow_factor: float
    aod_rad: float
    aoa_rad: float


def wrap_angle(phi: float) -> float:
    """Map an angle to (-pi, pi]."""
    out = math.remainder(phi, 2 * math.pi)
    if out <= -math.pi:
        out += 2 * math.pi
    return out


def ula_response(geom: ArrayGeometry, phi: float) -> np.ndarray:
    if geom.kind != ULA_Y:
        raise ValueError(f"ula_response needs a ULA, got {geom.kind}")
    n = geom.size
    phase = 2 * np.pi * geom.spacing_over_wavelength * np.sin(phi) * np.arange(n)
    return np.exp(1j * phase) / np.sqrt(n)


def upa_response(geom: ArrayGeometry, phi: float, theta: float) -> np.ndarray:
    """Planar-array response; element (m, n) sits at flat index ``m * h + n``."""
    if geom.kind != UPA_YZ:
        raise ValueError(f"upa_response needs a UPA, got {geom.kind}")
    w, h = geom.n_elements
    m = np.arange(w)[:, None]
    n = np.arange(h)[None, :]
    s = np.sin(phi)
    phase = 2 * np.pi * geom.spacing_over_wavelength * (m * s * np.cos(theta) + n * s * np.sin(theta))
    return (np.exp(1j * phase) / np.sqrt(w * h)).ravel()


def array_response(geom: ArrayGeometry, phi: float, theta: float = 0.0) -> np.ndarray:
    if geom.kind == ULA_Y:
        return ula_response(geom, phi)
    return upa_response(geom, phi, theta)


def los_probability(r: float) -> float:
    """Probability that a link of horizontal length ``r`` meters is LOS."""
    if not r > 0:
        raise ValueError(f"distance must be positive, got {r}")
    e = math.exp(-r / 63.0)
    p = min(18.0 / r, 1.0) * (1.0 - e) + e
    return min(max(p, 0.0), 1.0)


def path_loss_db(r: float, state: str, params: PropagationParams) -> float:
    r = max(float(r), 1.0)
    if state == LOS:
        return params.kappa_los_db + 10.0 * params.alpha_los * math.log10(r)
    if state == NLOS:
        return params.kappa_nlos_db + 10.0 * params.alpha_nlos * math.log10(r)
    raise ValueError(f"unknown link state {state!r}")


def amplitude_path_loss(r: float, state: str, params: PropagationParams) -> float:
    """Amplitude-domain loss: square root of the linear power loss."""
    return 10.0 ** (path_loss_db(r, state, params) / 20.0)


def sample_shadowing(rng: np.random.Generator, mu_v_db: float, sigma_v_db: float) -> float:
    """Linear power factor v with 10*log10(v) ~ Normal(mu, sigma^2)."""
    if sigma_v_db < 0:
        raise ValueError("sigma_v_db must be non-negative")
    return 10.0 ** (rng.normal(mu_v_db, sigma_v_db) / 10.0)


def draw_link(
    rng: np.random.Generator,
    distance: float,
    aod: float,
    aoa: float,
    params: PropagationParams,
) -> LinkRealization:
    """Draw one link realization given its geometry.

    Draw order is fixed (state, shadowing, gain, angle offsets) so a seeded
    generator reproduces the same link.
    """
    state = LOS if rng.random() < los_probability(max(distance, 1e-9)) else NLOS
    sigma = params.sigma_v_los_db if state == LOS else params.sigma_v_nlos_db
    v = sample_shadowing(rng, params.mu_v_db, sigma)
    gain = complex(rng.normal(0.0, math.sqrt(0.5)), rng.normal(0.0, math.sqrt(0.5)))
    spread = math.radians(params.nlos_angle_spread_deg)
    offsets = rng.uniform(-spread, spread, size=2)
    if state == NLOS:
        aod = aod + offsets[0]
        aoa = aoa + offsets[1]
    return LinkRealization(
        link_state=state,
        complex_gain=gain,
        amplitude_path_loss=amplitude_path_loss(distance, state, params),
        shadow_factor=v,
        aod_rad=wrap_angle(aod),
        aoa_rad=wrap_angle(aoa),
    )


def channel_matrix(
    link: LinkRealization, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry, n_paths: int = 1
) -> np.ndarray:
    """N_r x N_t channel of a single-path link."""
    n_t, n_r = tx_geom.size, rx_geom.size
    a_t = array_response(tx_geom, link.aod_rad)
    a_r = array_response(rx_geom, link.aoa_rad)
    scale = math.sqrt(n_t * n_r / n_paths) * link.complex_gain * math.sqrt(link.shadow_factor)
    scale /= link.amplitude_path_loss
    return scale * np.outer(a_r, a_t.conj())
