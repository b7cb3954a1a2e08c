import csv
import io

import numpy as np
import pytest
from scipy import stats

from plpoi import rng as rngmod
from plpoi.comm import (
    BER_COLUMNS,
    BerPoint,
    ChannelSample,
    apply_channel,
    ber_montecarlo,
    ber_qpsk_awgn,
    ber_qpsk_rayleigh,
    ber_rows_to_csv,
    ber_theory_awgn,
    ber_theory_rayleigh,
    channel_gain,
    draw_payloads,
    equalize,
    noise_variance,
    q_function,
)
from plpoi.estimators import make_designer
from plpoi.exceptions import ConfigError, DegenerateWarning


def _closed_form(mq, g, kind):
    # the closed forms written out independently, for any order
    k = np.log2(mq)
    if kind == "awgn":
        return 2 * (mq - 1) / (mq * k) * stats.norm.sf(np.sqrt(6 * g * k / (mq**2 - 1)))
    a = 3 * g * k / (mq**2 - 1)
    return (mq - 1) / (mq * k) * (1 - np.sqrt(a / (a + 1)))


def test_noise_variance():
    assert noise_variance(0.0) == pytest.approx(0.5)
    assert noise_variance(10.0) == pytest.approx(0.05)
    assert noise_variance(np.inf) == 0.0


def test_q_function_matches_normal_tail():
    x = np.linspace(-3, 6, 19)
    np.testing.assert_allclose(q_function(x), stats.norm.sf(x), rtol=1e-12)


@pytest.mark.parametrize("ebn0", [0.0, 4.0, 8.0, 15.0])
def test_theory_curves_match_written_forms(ebn0):
    g = 10 ** (ebn0 / 10)
    assert ber_theory_awgn(ebn0) == pytest.approx(_closed_form(4, g, "awgn"), rel=1e-12)
    assert ber_theory_rayleigh(ebn0) == pytest.approx(_closed_form(4, g, "rayleigh"), rel=1e-12)
    # at order 2 the same forms coincide with exact Gray QPSK
    assert ber_qpsk_awgn(ebn0) == pytest.approx(_closed_form(2, g, "awgn"), rel=1e-12)
    assert ber_qpsk_rayleigh(ebn0) == pytest.approx(_closed_form(2, g, "rayleigh"), rel=1e-12)


def test_theory_frozen_values():
    assert ber_theory_awgn(0.0) == pytest.approx(0.75 * stats.norm.sf(np.sqrt(0.8)), rel=1e-12)
    assert ber_theory_awgn(0.0) == pytest.approx(0.13916001357101160, rel=1e-12)
    assert ber_theory_rayleigh(0.0) == pytest.approx(0.375 * (1 - np.sqrt(0.4 / 1.4)), rel=1e-12)
    with pytest.raises(ConfigError):
        ber_theory_awgn(0.0, mq=16)


def test_channel_and_equalizer():
    with pytest.raises(ConfigError):
        ChannelSample(noise_var=-1)
    x = np.exp(1j * np.arange(4))
    y = apply_channel(x, ChannelSample(h=2j), rngmod.stream(0))
    np.testing.assert_allclose(equalize(y, 2j), x)
    with pytest.warns(DegenerateWarning):
        np.testing.assert_array_equal(equalize(y, 0), np.zeros(4))


def test_noise_statistics():
    y = apply_channel(np.zeros(200_000), ChannelSample(noise_var=0.3), rngmod.stream(1))
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.3, rel=0.02)
    assert abs(np.mean(y.real * y.imag)) < 0.01


def test_channel_gain():
    assert channel_gain("awgn", 0, 0) == 1
    gains = np.array([channel_gain("rayleigh", 4, t) for t in range(4000)])
    assert np.mean(np.abs(gains) ** 2) == pytest.approx(1.0, rel=0.1)
    assert channel_gain("rayleigh", 4, 7) == channel_gain("rayleigh", 4, 7)
    with pytest.raises(ConfigError):
        channel_gain("rician", 0, 0)


def test_payloads_are_keyed_by_trial():
    a, bits_a = draw_payloads(16, 5, seed=3)
    b, _ = draw_payloads(16, 2, seed=3, start=3)
    np.testing.assert_array_equal(a[3:], b)
    assert bits_a.shape == (5, 32)


def test_plain_montecarlo_matches_exact_qpsk_awgn():
    points = ber_montecarlo(make_designer("plain"), "awgn", [2.0, 6.0], 200, seed=8, n_subcarriers=256)
    for p in points:
        assert abs(p.ber - ber_qpsk_awgn(p.ebn0_db)) <= 4 * p.standard_error


def test_plain_montecarlo_matches_exact_qpsk_rayleigh():
    # one gain per trial: errors cluster by trial, so use many short trials
    points = ber_montecarlo(make_designer("plain"), "rayleigh", [2.0, 6.0], 4000, seed=8, n_subcarriers=8)
    for p in points:
        assert p.ber == pytest.approx(ber_qpsk_rayleigh(p.ebn0_db), rel=0.1)


def test_noiseless_plpoi_is_error_free():
    points = ber_montecarlo(make_designer("plpoi", theta=0.6, max_iters=40), "rayleigh", [np.inf], 8, seed=2, n_subcarriers=128)
    assert points[0].errors == 0


def test_montecarlo_validation():
    with pytest.raises(ConfigError):
        ber_montecarlo(make_designer("plain"), "awgn", [0.0], 0, seed=0)
    with pytest.raises(ConfigError):
        ber_montecarlo(make_designer("plain"), "fading", [0.0], 1, seed=0)


def test_ber_csv():
    p = BerPoint(ebn0_db=4.0, ber=0.125, trials=2, errors=1, bits=8)
    rows = list(csv.reader(io.StringIO(ber_rows_to_csv([("plain", "awgn", p)]))))
    assert tuple(rows[0]) == BER_COLUMNS
    assert rows[1] == ["plain", "awgn", "4", "2", "1", "0.125"]
