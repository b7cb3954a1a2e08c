import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plpoi.exceptions import ConfigError, DimensionError, DomainError
from plpoi.spectral import papr_db, synthesize_time, wrap_phase
from plpoi.waveform import (
    BaselineWeights,
    baseline_design,
    demodulate_qpsk,
    info_from_phases,
    modulate_qpsk,
    nearest_qpsk,
    pd_project,
    pd_violation,
    phase_difference,
    radar_reference,
    random_info_spectrum,
    zadoff_chu,
)

# frozen output of radar_reference(1024) (200 refinement passes, 4x oversampling)
RADAR_REF_PAPR_DB_1024 = 1.2060259312900359

thetas = st.floats(1e-3, np.pi / 4 - 1e-3)


def test_gray_map():
    info = modulate_qpsk([0, 0, 0, 1, 1, 0, 1, 1])
    expected = np.exp(1j * np.array([np.pi / 4, -np.pi / 4, 3 * np.pi / 4, -3 * np.pi / 4]))
    np.testing.assert_allclose(info.symbols, expected, atol=1e-15)


@given(st.lists(st.integers(0, 1), min_size=2, max_size=200).filter(lambda b: len(b) % 2 == 0))
def test_qpsk_round_trip(bits):
    info = modulate_qpsk(bits)
    np.testing.assert_array_equal(demodulate_qpsk(info.symbols), bits)
    np.testing.assert_allclose(np.abs(info.symbols), 1.0)


def test_qpsk_errors_and_ties():
    with pytest.raises(DimensionError):
        modulate_qpsk([0, 1, 1])
    with pytest.raises(ConfigError):
        modulate_qpsk([0, 2])
    np.testing.assert_array_equal(demodulate_qpsk([0j, -1 + 0j]), [0, 0, 1, 0])
    assert nearest_qpsk(0j) == pytest.approx((1 + 1j) / np.sqrt(2))


def test_info_from_phases_snaps_to_constellation():
    info = info_from_phases([0.7854, -2.3562])
    np.testing.assert_allclose(info.symbols, [np.exp(1j * np.pi / 4), np.exp(-3j * np.pi / 4)])
    np.testing.assert_array_equal(info.bits, [0, 0, 1, 1])


def test_random_info_spectrum_is_seeded():
    a = random_info_spectrum(16, np.random.default_rng(3))
    b = random_info_spectrum(16, np.random.default_rng(3))
    np.testing.assert_array_equal(a.symbols, b.symbols)
    assert a.n == 16


@given(
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(-np.pi, np.pi),
    thetas,
)
@settings(max_examples=200)
def test_projection_feasible_and_optimal(re, im, c_phase, theta):
    x_bar = np.array([complex(re, im)])
    c = np.exp(1j * np.array([c_phase]))
    x = pd_project(x_bar, c, theta)
    assert abs(abs(x[0]) - 1) < 1e-12
    assert abs(phase_difference(x, c)[0]) <= theta + 1e-12
    # no point on the arc is closer
    arc = c[0] * np.exp(1j * np.linspace(-theta, theta, 2001))
    assert abs(x_bar[0] - x[0]) <= np.min(np.abs(x_bar[0] - arc)) + 1e-9
    np.testing.assert_allclose(pd_project(x, c, theta), x, atol=1e-12)


def test_projection_keeps_inside_and_clamps_outside():
    c = np.array([1.0 + 0j, 1.0 + 0j, 1.0 + 0j])
    x_bar = 2 * np.exp(1j * np.array([0.1, 0.5, -3.0]))
    x = pd_project(x_bar, c, 0.3)
    np.testing.assert_allclose(np.angle(x), [0.1, 0.3, -0.3], atol=1e-15)


def test_projection_zero_maps_to_payload_phase():
    c = np.exp(1j * np.array([0.7, -2.0]))
    np.testing.assert_allclose(pd_project(np.zeros(2, dtype=complex), c, 0.5), c)


def test_projection_validates():
    with pytest.raises(ConfigError):
        pd_project(np.ones(2), np.ones(2), np.pi / 4)
    with pytest.raises(ConfigError):
        pd_project(np.ones(2), np.ones(2), 0.0)
    with pytest.raises(DimensionError):
        pd_project(np.ones(2), np.ones(3), 0.5)


def test_pd_violation_sign():
    c = np.ones(3, dtype=complex)
    assert pd_violation(np.exp(1j * np.array([0.1, -0.2, 0.0])), c, 0.3) == pytest.approx(-0.1)
    assert pd_violation(np.exp(1j * np.array([0.5, 0.0, 0.0])), c, 0.3) == pytest.approx(0.2)
    assert wrap_phase(phase_difference(np.array([-1 + 1e-12j]), np.array([-1 - 1e-12j]))[0]) == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("n", [7, 8, 63, 64])
def test_zadoff_chu_is_cazac(n):
    z = zadoff_chu(n, 1)
    np.testing.assert_allclose(np.abs(z), 1.0)
    # periodic autocorrelation off-peak vanishes
    r = np.fft.ifft(np.abs(np.fft.fft(z)) ** 2)
    np.testing.assert_allclose(np.abs(r[1:]), 0.0, atol=1e-10)
    with pytest.raises(ConfigError):
        zadoff_chu(n, n)


def test_radar_reference_frozen_and_unimodular():
    x0 = radar_reference(1024)
    np.testing.assert_allclose(np.abs(x0), 1.0, atol=1e-12)
    p = papr_db(synthesize_time(x0))
    assert p == pytest.approx(RADAR_REF_PAPR_DB_1024, abs=1e-9)
    assert p <= 2.0
    assert papr_db(synthesize_time(radar_reference(64))) <= 2.0
    with pytest.raises(ConfigError):
        radar_reference(1)


def test_baseline_endpoints(rng):
    c = modulate_qpsk(rng.integers(0, 2, 64)).symbols
    x0 = radar_reference(32)
    np.testing.assert_allclose(baseline_design(c, BaselineWeights(1.0, x0)), c)
    np.testing.assert_allclose(baseline_design(c, BaselineWeights(0.0, x0)), x0)
    mixed = baseline_design(c, BaselineWeights(0.3, x0))
    np.testing.assert_allclose(mixed, 0.3 * c + 0.7 * x0)
    with pytest.raises(DimensionError):
        baseline_design(np.ones(16), BaselineWeights(0.5, x0))


def test_baseline_weight_validation():
    x0 = np.ones(4, dtype=complex)
    with pytest.raises(ConfigError):
        BaselineWeights(1.5, x0)
    with pytest.raises(DomainError):
        BaselineWeights(0.5, 2 * x0)
