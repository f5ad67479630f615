import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwave_ddqn.channel import (
    LOS,
    NLOS,
    ArrayGeometry,
    LinkRealization,
    PropagationParams,
    amplitude_path_loss,
    channel_matrix,
    draw_link,
    los_probability,
    path_loss_db,
    sample_shadowing,
    ula_response,
    upa_response,
    wrap_angle,
)

angles = st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False)


def test_ula_single_element():
    np.testing.assert_allclose(ula_response(ArrayGeometry.ula(1), 0.7), [1 + 0j])


def test_ula_broadside_is_flat():
    a = ula_response(ArrayGeometry.ula(16), 0.0)
    np.testing.assert_allclose(a, np.full(16, 0.25 + 0j), atol=1e-15)


def test_ula_endfire_two_elements():
    a = ula_response(ArrayGeometry.ula(2), math.pi / 2)
    np.testing.assert_allclose(a, np.array([1, -1]) / math.sqrt(2), atol=1e-15)


def test_upa_examples():
    np.testing.assert_allclose(upa_response(ArrayGeometry.upa(1, 1), 0.3, 1.2), [1 + 0j])
    np.testing.assert_allclose(upa_response(ArrayGeometry.upa(2, 2), 0.0, 1.1), np.full(4, 0.5), atol=1e-15)
    np.testing.assert_allclose(
        upa_response(ArrayGeometry.upa(2, 1), math.pi / 2, 0.0), np.array([1, -1]) / math.sqrt(2), atol=1e-15
    )


def test_wrong_array_kind_rejected():
    with pytest.raises(ValueError):
        ula_response(ArrayGeometry.upa(2, 2), 0.1)
    with pytest.raises(ValueError):
        upa_response(ArrayGeometry.ula(4), 0.1, 0.2)
    with pytest.raises(ValueError):
        ArrayGeometry.ula(0)
    with pytest.raises(ValueError):
        ArrayGeometry.ula(4, spacing_over_wavelength=0.0)


def test_array_responses_unit_norm():
    rng = np.random.default_rng(0)
    phis = rng.uniform(-math.pi, math.pi, size=1000)
    thetas = rng.uniform(-math.pi, math.pi, size=1000)
    for n in range(1, 65):
        geom = ArrayGeometry.ula(n)
        norms = [np.linalg.norm(ula_response(geom, p)) for p in phis[:: max(1, n // 4)]]
        assert np.max(np.abs(np.array(norms) - 1.0)) < 1e-12
    for w, h in [(1, 1), (2, 3), (4, 4), (8, 8)]:
        geom = ArrayGeometry.upa(w, h)
        for p, t in zip(phis, thetas):
            assert abs(np.linalg.norm(upa_response(geom, p, t)) - 1.0) < 1e-12


@given(n=st.integers(1, 64), phi=angles)
def test_ula_sine_symmetry(n, phi):
    geom = ArrayGeometry.ula(n)
    np.testing.assert_allclose(ula_response(geom, phi), ula_response(geom, math.pi - phi), atol=1e-9)


def test_los_probability_values():
    assert los_probability(10) == 1.0
    assert los_probability(18) == 1.0
    # independent evaluation: 18/63 * (1 - e^-1) + e^-1
    expected = 18 / 63 * (1 - math.exp(-1)) + math.exp(-1)
    assert los_probability(63) == pytest.approx(expected, abs=1e-15)
    assert los_probability(63) == pytest.approx(0.5485, abs=1e-4)


@pytest.mark.parametrize("r", [0.0, -3.0])
def test_los_probability_rejects_nonpositive(r):
    with pytest.raises(ValueError):
        los_probability(r)


@given(r=st.floats(min_value=1e-6, max_value=1e6))
def test_los_probability_bounds(r):
    p = los_probability(r)
    assert 0.0 <= p <= 1.0
    if r <= 18:
        assert p == 1.0


def test_path_loss_examples():
    params = PropagationParams()
    assert path_loss_db(1, LOS, params) == pytest.approx(61.4)
    assert path_loss_db(100, LOS, params) == pytest.approx(101.4)
    assert path_loss_db(1, NLOS, params) == pytest.approx(72.0)
    assert amplitude_path_loss(100, LOS, params) == pytest.approx(10 ** (101.4 / 20))
    # clamped below one meter
    assert path_loss_db(0.2, LOS, params) == path_loss_db(1.0, LOS, params)


@given(r1=st.floats(0.01, 1e4), r2=st.floats(0.01, 1e4), state=st.sampled_from([LOS, NLOS]))
def test_path_loss_monotone(r1, r2, state):
    params = PropagationParams()
    lo, hi = sorted((r1, r2))
    assert amplitude_path_loss(lo, state, params) <= amplitude_path_loss(hi, state, params)
    assert amplitude_path_loss(lo, state, params) >= 1.0


def test_shadowing_degenerate():
    rng = np.random.default_rng(1)
    assert all(sample_shadowing(rng, 0.0, 0.0) == 1.0 for _ in range(10))
    assert all(sample_shadowing(rng, 3.0, 0.0) == pytest.approx(10**0.3) for _ in range(10))
    assert 10**0.3 == pytest.approx(1.9953, abs=1e-4)


def test_shadowing_monte_carlo_mean():
    rng = np.random.default_rng(2)
    db = [10 * math.log10(sample_shadowing(rng, 0.0, 8.0)) for _ in range(100_000)]
    assert abs(np.mean(db)) < 0.1
    assert np.std(db) == pytest.approx(8.0, rel=0.02)


def _link(gain=1 + 0j, v=1.0, p=1.0, aod=0.0, aoa=0.0):
    return LinkRealization(LOS, gain, p, v, aod, aoa)


def test_channel_matrix_hand_example():
    H = channel_matrix(_link(), ArrayGeometry.ula(16), ArrayGeometry.ula(1))
    assert H.shape == (1, 16)
    np.testing.assert_allclose(H, np.ones((1, 16)), atol=1e-14)


def test_channel_matrix_zero_gain():
    H = channel_matrix(_link(gain=0j), ArrayGeometry.ula(16), ArrayGeometry.ula(4))
    assert np.all(H == 0)


def test_channel_frobenius_identity_and_rank():
    rng = np.random.default_rng(3)
    params = PropagationParams()
    worst = 0.0
    for _ in range(1000):
        n_t, n_r = int(rng.integers(1, 33)), int(rng.integers(1, 5))
        link = draw_link(rng, rng.uniform(1, 120), rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi), params)
        H = channel_matrix(link, ArrayGeometry.ula(n_t), ArrayGeometry.ula(n_r))
        expected = math.sqrt(n_t * n_r) * abs(link.complex_gain) * math.sqrt(link.shadow_factor) / link.amplitude_path_loss
        worst = max(worst, abs(np.linalg.norm(H) - expected) / expected)
        if min(n_t, n_r) > 1:
            s = np.linalg.svd(H, compute_uv=False)
            assert s[1] < 1e-10 * s[0]
    assert worst < 1e-10


def test_draw_link_near_is_los_and_angles_wrapped():
    rng = np.random.default_rng(4)
    params = PropagationParams()
    for _ in range(200):
        link = draw_link(rng, 10.0, 3.1, -3.1, params)
        assert link.link_state == LOS
        assert link.aod_rad == pytest.approx(3.1)
    for _ in range(500):
        link = draw_link(rng, 150.0, math.pi, -math.pi, params)
        assert -math.pi < link.aod_rad <= math.pi
        assert -math.pi < link.aoa_rad <= math.pi
        assert link.shadow_factor > 0
        assert link.amplitude_path_loss >= 1


def test_draw_link_deterministic():
    params = PropagationParams()
    a = [draw_link(np.random.default_rng(9), 70.0, 0.3, 0.1, params) for _ in range(2)]
    assert a[0] == a[1]


@given(phi=st.floats(-20, 20))
@settings(max_examples=200)
def test_wrap_angle_range(phi):
    w = wrap_angle(phi)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(phi), abs_tol=1e-9)
