"""Device compute-latency and wireless transmission models.

Compute latency of a device working through ``c`` MACs follows a shifted
exponential distribution: a deterministic floor ``sec_per_mac * c`` plus an
exponential fluctuation with rate ``fluctuation_rate / c``.  Transmission
uses a Shannon-rate channel with log-distance path loss and exponential
small-scale fading.

All internal math is linear-scale SI; dB/dBm conversions are centralized in
the helpers below to keep unit handling in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Sentinel returned by :func:`comm_latency` when the rate is zero.  It is
#: larger than any finite latency, so max-reductions stay well defined.
INFINITE_LATENCY = math.inf


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def dbm_to_mw(dbm):
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class DeviceProfile:
    """Compute and radio parameters of one device.

    sec_per_mac is the slope of the compute-latency floor (seconds per MAC);
    fluctuation_rate (MACs per second) scales the exponential fluctuation.
    """

    sec_per_mac: float
    fluctuation_rate: float
    tx_power_dbm: float
    distance_m: float

    def __post_init__(self):
        if self.sec_per_mac <= 0:
            raise ValueError("sec_per_mac must be > 0")
        if self.fluctuation_rate <= 0:
            raise ValueError("fluctuation_rate must be > 0")
        if self.distance_m <= 0:
            raise ValueError("distance_m must be > 0")


@dataclass(frozen=True)
class SystemParams:
    """Shared radio-system parameters.

    ``noise_mode`` selects how ``noise_dbm`` is interpreted: ``"total"``
    treats it as the total noise power over the band, ``"psd"`` as a power
    spectral density in dBm/Hz that is integrated over ``bandwidth_hz``.
    """

    bandwidth_hz: float
    noise_dbm: float = -114.0
    num_devices: int = 1
    seed: int = 0
    noise_mode: str = "total"

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.num_devices < 1:
            raise ValueError("num_devices must be >= 1")
        if self.noise_mode not in ("total", "psd"):
            raise ValueError("noise_mode must be 'total' or 'psd'")

    @property
    def noise_power_dbm(self):
        if self.noise_mode == "psd":
            return self.noise_dbm + 10.0 * math.log10(self.bandwidth_hz)
        return self.noise_dbm


@dataclass(frozen=True)
class ChannelRealization:
    """One realization of a device's uplink channel."""

    gain_sq: float
    noise_dbm: float
    snr_linear: float

    def __post_init__(self):
        if self.gain_sq < 0 or self.snr_linear < 0:
            raise ValueError("gain_sq and snr_linear must be >= 0")


def path_loss_db(distance_m):
    """Log-distance path loss in dB: 128.1 + 37.6*log10(d_km)."""
    if distance_m <= 0:
        raise ValueError("distance_m must be > 0")
    return 128.1 + 37.6 * math.log10(1e-3 * distance_m)


def _make_channel(dev: DeviceProfile, sys: SystemParams, fading_factor: float) -> ChannelRealization:
    gain_sq = db_to_linear(-path_loss_db(dev.distance_m)) * fading_factor
    noise_dbm = sys.noise_power_dbm
    snr = dbm_to_mw(dev.tx_power_dbm) * gain_sq / dbm_to_mw(noise_dbm)
    return ChannelRealization(gain_sq=gain_sq, noise_dbm=noise_dbm, snr_linear=snr)


def sample_channel(dev: DeviceProfile, sys: SystemParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw a channel with unit-mean exponential small-scale fading."""
    return _make_channel(dev, sys, float(rng.exponential()))


def expected_channel(dev: DeviceProfile, sys: SystemParams) -> ChannelRealization:
    """Channel at the mean fading gain (fading factor fixed to 1)."""
    return _make_channel(dev, sys, 1.0)


def transmission_rate(bandwidth_ratio, ch: ChannelRealization, sys: SystemParams):
    """Shannon uplink rate in bits/s for a device given its bandwidth share."""
    if not 0 < bandwidth_ratio <= 1:
        raise ValueError(f"bandwidth_ratio must be in (0, 1], got {bandwidth_ratio}")
    return bandwidth_ratio * sys.bandwidth_hz * math.log2(1.0 + ch.snr_linear)


def comm_latency(data_bits, rate_bps):
    """Uplink transmission time in seconds.

    Zero data costs nothing; zero rate with nonzero data returns
    :data:`INFINITE_LATENCY`.
    """
    if data_bits < 0:
        raise ValueError("data_bits must be >= 0")
    if rate_bps < 0:
        raise ValueError("rate_bps must be >= 0")
    if data_bits == 0:
        return 0.0
    if rate_bps == 0:
        return INFINITE_LATENCY
    return data_bits / rate_bps


def sample_compute_latency(dev: DeviceProfile, macs, rng: np.random.Generator):
    """Draw one shifted-exponential compute latency for ``macs`` MACs.

    The floor is ``sec_per_mac * macs``; the fluctuation is exponential with
    rate ``fluctuation_rate / macs`` (scale ``macs / fluctuation_rate``).
    """
    if macs < 0:
        raise ValueError("macs must be >= 0")
    if macs == 0:
        return 0.0
    return dev.sec_per_mac * macs + rng.exponential(macs / dev.fluctuation_rate)


def expected_compute_latency(dev: DeviceProfile, macs):
    """Mean compute latency: macs * (sec_per_mac + 1/fluctuation_rate)."""
    if macs < 0:
        raise ValueError("macs must be >= 0")
    return macs * (dev.sec_per_mac + 1.0 / dev.fluctuation_rate)


def compute_latency_cdf(dev: DeviceProfile, macs, theta):
    """Closed-form CDF of the shifted-exponential compute latency.

    Vectorized over ``theta`` so it can be handed to goodness-of-fit tests.
    """
    theta = np.asarray(theta, dtype=float)
    floor = dev.sec_per_mac * macs
    rate = dev.fluctuation_rate / macs
    return np.where(theta >= floor, 1.0 - np.exp(-rate * (theta - floor)), 0.0)
