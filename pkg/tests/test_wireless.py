import math

import numpy as np
import pytest
from scipy import stats

from sflopt.rng import rng_stream
from sflopt.wireless import (
    INFINITE_LATENCY,
    ChannelRealization,
    DeviceProfile,
    SystemParams,
    _make_channel,
    comm_latency,
    compute_latency_cdf,
    expected_channel,
    expected_compute_latency,
    path_loss_db,
    sample_channel,
    sample_compute_latency,
    transmission_rate,
)

DEV = DeviceProfile(sec_per_mac=1e-9, fluctuation_rate=2e9, tx_power_dbm=10.0, distance_m=500.0)
SYS = SystemParams(bandwidth_hz=20e6, noise_dbm=-114.0, num_devices=1, seed=0)


def test_path_loss_reference_points():
    assert path_loss_db(1000.0) == pytest.approx(128.1)
    assert path_loss_db(10000.0) == pytest.approx(128.1 + 37.6)
    assert path_loss_db(100.0) == pytest.approx(128.1 - 37.6)
    with pytest.raises(ValueError):
        path_loss_db(0.0)


def test_sample_channel_reproducible():
    a = sample_channel(DEV, SYS, rng_stream(5))
    b = sample_channel(DEV, SYS, rng_stream(5))
    assert a == b


def test_fading_mean_is_one():
    rng = rng_stream(11)
    rho = _make_channel(DEV, SYS, 1.0).gain_sq
    gains = np.array([sample_channel(DEV, SYS, rng).gain_sq for _ in range(10**5)])
    assert np.mean(gains) / rho == pytest.approx(1.0, abs=0.02)


def test_gain_scales_linearly_with_large_scale_component():
    assert _make_channel(DEV, SYS, 2.0).gain_sq == pytest.approx(
        2.0 * _make_channel(DEV, SYS, 1.0).gain_sq
    )


def test_transmission_rate_hand_values():
    ch = ChannelRealization(gain_sq=1.0, noise_dbm=-114.0, snr_linear=3.0)
    assert transmission_rate(0.5, ch, SYS) == pytest.approx(20e6)
    ch0 = ChannelRealization(gain_sq=0.0, noise_dbm=-114.0, snr_linear=0.0)
    assert transmission_rate(1.0, ch0, SYS) == 0.0
    ch1 = ChannelRealization(gain_sq=1.0, noise_dbm=-114.0, snr_linear=1.0)
    assert transmission_rate(1.0, ch1, SYS) == pytest.approx(20e6)


def test_transmission_rate_domain():
    ch = ChannelRealization(gain_sq=1.0, noise_dbm=-114.0, snr_linear=1.0)
    for bad in (0.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            transmission_rate(bad, ch, SYS)


def test_rate_monotone_in_snr_and_linear_in_ratio():
    snrs = [0.1, 1.0, 5.0, 50.0]
    rates = [
        transmission_rate(1.0, ChannelRealization(1.0, -114.0, s), SYS) for s in snrs
    ]
    assert all(a < b for a, b in zip(rates, rates[1:]))
    ch = ChannelRealization(1.0, -114.0, 3.0)
    assert transmission_rate(0.25, ch, SYS) == pytest.approx(0.25 * transmission_rate(1.0, ch, SYS))


def test_comm_latency():
    assert comm_latency(20e6, 20e6) == 1.0
    assert comm_latency(0, 123.0) == 0.0
    assert comm_latency(6_195_200, 20e6) == pytest.approx(0.30976)
    assert comm_latency(1.0, 0.0) == INFINITE_LATENCY
    assert comm_latency(1.0, 0.0) > 1e300
    with pytest.raises(ValueError):
        comm_latency(-1.0, 1.0)


def test_compute_latency_floor():
    rng = rng_stream(3)
    c = 1e9
    samples = [sample_compute_latency(DEV, c, rng) for _ in range(1000)]
    assert min(samples) >= DEV.sec_per_mac * c


def test_compute_latency_mean():
    rng = rng_stream(4)
    c = 1e9
    samples = np.array([sample_compute_latency(DEV, c, rng) for _ in range(10**5)])
    # mean (a + 1/eps) * c = (1e-9 + 0.5e-9) * 1e9 = 1.5 s
    assert np.mean(samples) == pytest.approx(1.5, rel=0.01)


def test_compute_latency_degenerate_limit():
    fast = DeviceProfile(1e-9, 1e20, 10.0, 500.0)
    rng = rng_stream(5)
    s = sample_compute_latency(fast, 1e9, rng)
    assert s == pytest.approx(1.0, rel=1e-6)


def test_expected_compute_latency_hand_value():
    dev = DeviceProfile(0.2e-9, 1e10, 10.0, 500.0)
    assert expected_compute_latency(dev, 1e9) == pytest.approx(0.3)
    assert expected_compute_latency(dev, 0) == 0.0


def test_expected_matches_sampled_mean():
    rng = rng_stream(6)
    c = 3e8
    samples = np.array([sample_compute_latency(DEV, c, rng) for _ in range(10**5)])
    assert np.mean(samples) == pytest.approx(expected_compute_latency(DEV, c), rel=0.01)


def test_cdf_ks_statistic():
    rng = rng_stream(7)
    c = 1e9
    samples = np.array([sample_compute_latency(DEV, c, rng) for _ in range(10**5)])
    result = stats.kstest(samples, lambda t: compute_latency_cdf(DEV, c, t))
    assert result.statistic < 0.01


def test_noise_mode_psd():
    psd = SystemParams(bandwidth_hz=20e6, noise_dbm=-114.0, noise_mode="psd")
    assert psd.noise_power_dbm == pytest.approx(-114.0 + 10 * math.log10(20e6))
    assert SYS.noise_power_dbm == -114.0


def test_device_validation():
    with pytest.raises(ValueError):
        DeviceProfile(0.0, 1.0, 10.0, 500.0)
    with pytest.raises(ValueError):
        DeviceProfile(1e-9, 1.0, 10.0, -5.0)


def test_expected_channel_is_fading_free():
    assert expected_channel(DEV, SYS) == _make_channel(DEV, SYS, 1.0)
