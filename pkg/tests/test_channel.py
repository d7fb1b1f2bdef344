import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchsim.channel import (
    FullyConnected,
    PinchConfig,
    PsFullyConnected,
    RadioParams,
    SubConnected,
    WaveguideLayout,
    channel_matrix,
    composite_channel,
    effective_channel,
    pa_coefficient,
    pa_coefficients,
    sinr,
)
from pinchsim.coupling import PowerModel
from pinchsim.errors import SingularityError, ValidationError

UNIT_RADIO = RadioParams(wavelength=1.0)


def straight(length=10.0, n_eff=1.4, atten=0.0, feed=(0.0, 0.0, 0.0)):
    return WaveguideLayout(feed, [1.0, 0.0, 0.0], length, n_eff, atten)


def test_reference_gain_default():
    r = RadioParams(0.03)
    assert r.reference_gain == pytest.approx(0.03 / (4 * math.pi))
    assert RadioParams.from_frequency(10e9).wavelength == pytest.approx(0.0299792458)


def test_pa_beside_user_at_one_meter():
    g = pa_coefficient([0.0, 1.0, 0.0], straight(), 0.0, UNIT_RADIO)
    assert g.real == pytest.approx(1 / (4 * math.pi), abs=1e-15)
    assert abs(g.imag) < 1e-15


def test_pa_three_meters():
    g = pa_coefficient([0.0, 0.0, 3.0], straight(), 0.0, UNIT_RADIO)
    assert g.real == pytest.approx(1 / (12 * math.pi), abs=1e-14)
    assert abs(g.imag) < 1e-14


def test_pa_with_waveguide_phase():
    # phase 2pi/0.01 * (2 + 1.4*0.5) = 540 pi, amplitude (0.01/4pi)/2
    radio = RadioParams(0.01)
    g = pa_coefficient([0.5, 2.0, 0.0], straight(n_eff=1.4), 0.5, radio)
    assert g.real == pytest.approx(3.9788735772973833e-4, rel=1e-9)
    assert abs(g.imag) < 1e-9 * abs(g)


def test_coincident_user_is_singular():
    with pytest.raises(SingularityError):
        pa_coefficient([2.0, 0.0, 0.0], straight(), 2.0, UNIT_RADIO)


@pytest.mark.parametrize("offset", [-0.1, 10.5])
def test_offset_outside_waveguide(offset):
    with pytest.raises(ValidationError):
        pa_coefficient([0.0, 1.0, 0.0], straight(), offset, UNIT_RADIO)


@pytest.mark.parametrize("kwargs", [
    dict(axis=[1.0, 1.0, 0.0]),
    dict(length=0.0),
    dict(refractive_index=0.9),
    dict(attenuation_db_per_m=-0.01),
])
def test_invalid_waveguide(kwargs):
    base = dict(feed_point=[0, 0, 0], axis=[1.0, 0, 0], length=1.0)
    base.update(kwargs)
    with pytest.raises(ValidationError):
        WaveguideLayout(**base)


def test_attenuation_scales_amplitude():
    lossless = pa_coefficient([5.0, 2.0, 0.0], straight(), 5.0, UNIT_RADIO)
    lossy = pa_coefficient([5.0, 2.0, 0.0], straight(atten=0.01), 5.0, UNIT_RADIO)
    assert abs(lossy) / abs(lossless) == pytest.approx(10 ** (-0.05 / 20))


points = st.tuples(*[st.floats(-20, 20)] * 3)


@settings(max_examples=60)
@given(points, points, st.floats(0, 10))
def test_translation_invariance(user, shift, d):
    user = np.array(user)
    shift = np.array(shift)
    wg = straight()
    if np.linalg.norm(wg.position(d) - user) < 1e-3:
        return
    moved = straight(feed=tuple(shift))
    a = pa_coefficient(user, wg, d, RadioParams(0.05))
    b = pa_coefficient(user + shift, moved, d, RadioParams(0.05))
    assert abs(a - b) <= 1e-9 * abs(a)


@settings(max_examples=60)
@given(st.floats(0.5, 30), st.floats(0, 10), st.floats(1.0, 2.5), st.floats(0.005, 0.3))
def test_phase_structure(height, d, n_eff, lam):
    wg = straight(n_eff=n_eff)
    user = np.array([d, 0.0, height])
    g = pa_coefficient(user, wg, d, RadioParams(lam))
    expected = -2 * math.pi / lam * (height + n_eff * d)
    diff = cmath.phase(g) - expected
    assert abs(math.remainder(diff, 2 * math.pi)) < 1e-9 * max(1.0, abs(expected))


@settings(max_examples=60)
@given(st.floats(0.1, 20), st.floats(0.1, 20), st.floats(0, 10), st.floats(0, 10))
def test_amplitude_decay(r1, r2, d1, d2):
    wg = straight(atten=0.2)
    lo, hi = sorted((r1, r2))
    if hi - lo > 1e-9:
        a = abs(pa_coefficient([3.0, lo, 0.0], wg, 3.0, UNIT_RADIO))
        b = abs(pa_coefficient([3.0, hi, 0.0], wg, 3.0, UNIT_RADIO))
        assert a > b
    # fixed r: put the user on a ring around each PA position
    dl, dh = sorted((d1, d2))
    a = abs(pa_coefficient([dl, 2.0, 0.0], wg, dl, UNIT_RADIO))
    b = abs(pa_coefficient([dh, 2.0, 0.0], wg, dh, UNIT_RADIO))
    assert a >= b


def test_composite_single_and_empty():
    wg = straight()
    user = [3.0, 1.5, -2.0]
    g = pa_coefficient(user, wg, 4.2, UNIT_RADIO)
    assert composite_channel(user, wg, PinchConfig((4.2,)), UNIT_RADIO) == g
    assert composite_channel(user, wg, PinchConfig(()), UNIT_RADIO) == 0


def test_two_in_phase_pas_add_coherently():
    # r = 5 for both PAs (3-4-5 triangle) and n_eff * d integral: both phases are 0 mod 2pi
    wg = straight(n_eff=1.0)
    user = [5.0, 0.0, -4.0]
    h = composite_channel(user, wg, PinchConfig((2.0, 8.0)), UNIT_RADIO)
    beta = 1 / (4 * math.pi)
    assert abs(h) == pytest.approx(math.sqrt(2) * beta / 5, rel=1e-12)


def test_composite_is_linear_in_terms():
    wg = straight()
    user = [4.0, 1.0, 2.0]
    offsets = (1.0, 2.5, 6.0)
    cfg = PinchConfig(offsets, PowerModel.proportional(0.4))
    full = composite_channel(user, wg, cfg, UNIT_RADIO)
    amps = np.sqrt(cfg.fractions())
    g = pa_coefficients(user, wg, offsets, UNIT_RADIO)[0]
    without_middle = amps[0] * g[0] + amps[2] * g[2]
    assert full - amps[1] * g[1] == pytest.approx(without_middle, abs=1e-15)


def test_pinch_config_requires_sorted_offsets():
    with pytest.raises(ValidationError):
        PinchConfig((2.0, 1.0))
    with pytest.raises(ValidationError):
        PinchConfig((1.0, 1.0))


def test_channel_matrix_elementwise(rng):
    wgs = [straight(), WaveguideLayout([0, 5, 3], [0.6, 0.8, 0.0], 12.0, 1.5)]
    pinches = [PinchConfig((1.0, 3.0)), PinchConfig((0.5, 2.0, 7.0), PowerModel.proportional(0.7))]
    users = rng.uniform(-5, 5, size=(2, 3))
    H = channel_matrix(users, wgs, pinches, UNIT_RADIO)
    assert H.shape == (2, 2)
    for k in range(2):
        for w in range(2):
            ref = composite_channel(users[k], wgs[w], pinches[w], UNIT_RADIO)
            assert abs(H[k, w] - ref) <= 1e-12 * abs(ref)


def test_channel_matrix_edge_cases():
    wg = straight()
    pinch = PinchConfig((1.0,))
    H = channel_matrix([[0.0, 1.0, 1.0]], [wg], [pinch], UNIT_RADIO)
    assert H.shape == (1, 1)
    assert H[0, 0] == composite_channel([0.0, 1.0, 1.0], wg, pinch, UNIT_RADIO)
    assert channel_matrix(np.zeros((0, 3)), [wg], [pinch], UNIT_RADIO).shape == (0, 1)
    with pytest.raises(ValidationError):
        channel_matrix([[0.0, 1.0, 1.0]], [wg, wg], [pinch], UNIT_RADIO)


def test_effective_channel_architectures(rng):
    cm = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    assert np.array_equal(effective_channel(cm, SubConnected()), cm)
    eff = effective_channel(cm, FullyConnected())
    assert eff.shape == (3, 1)
    assert eff[:, 0] == pytest.approx((cm[:, 0] + cm[:, 1]) / math.sqrt(2))
    ps = effective_channel(cm, PsFullyConnected(np.ones((2, 1))))
    assert ps == pytest.approx(eff)
    with pytest.raises(ValidationError):
        effective_channel(cm, PsFullyConnected(np.ones((3, 1))))


def test_architecture_invariants():
    with pytest.raises(ValidationError):
        FullyConnected(np.ones((2, 1)))
    with pytest.raises(ValidationError):
        PsFullyConnected(np.full((2, 2), 0.5))


def test_sinr_single_user():
    h = np.array([[1 + 2j, -0.5j]])
    p = 3.0
    w = h.T / np.linalg.norm(h) * math.sqrt(p)
    assert sinr(h, w, 0.1)[0] == pytest.approx(p * np.linalg.norm(h) ** 2 / 0.1)


def test_sinr_zero_precoder():
    assert np.all(sinr(np.ones((2, 2)), np.zeros((2, 2)), 1.0) == 0)


def test_sinr_orthogonal_users():
    H = np.array([[1.0, 1j, 0], [0, 0, 2.0]])
    W = (H / np.linalg.norm(H, axis=1, keepdims=True)).T
    expected = np.linalg.norm(H, axis=1) ** 2 / 0.5
    assert sinr(H, W, 0.5) == pytest.approx(expected)


@settings(max_examples=40)
@given(st.floats(0, 2 * math.pi), st.integers(0, 2))
def test_sinr_column_phase_invariance(theta, col):
    rng = np.random.default_rng(7)
    H = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    W = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    V = W.copy()
    V[:, col] *= cmath.exp(1j * theta)
    assert sinr(H, V, 0.3) == pytest.approx(sinr(H, W, 0.3), rel=1e-12)
