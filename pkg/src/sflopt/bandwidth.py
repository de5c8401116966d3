"""Equal-finish-time bandwidth allocation.

With the split points fixed, the max-latency objective is minimized when
every device finishes at the same instant: any allocation with unequal
finish times can shift bandwidth from an early finisher to the straggler.
For a candidate common finish time tau, each device's required ratio has a
closed form, and the total required bandwidth is strictly decreasing in
tau, so the smallest feasible tau is found by binary search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

_MAX_ITER = 500


@dataclass(frozen=True)
class BandwidthAllocation:
    """Bandwidth ratios plus the common finish time they achieve.

    ``residual`` is the deliberately unallocated slack ``1 - sum(ratios)``,
    at most the search tolerance.
    """

    ratios: np.ndarray
    finish_time: float
    residual: float

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float)
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("ratios must lie in [0, 1]")
        object.__setattr__(self, "ratios", r)


def ratio_for_tau(tau, data_bits, compute_s, full_band_rates) -> np.ndarray:
    """Bandwidth ratio each device needs to finish exactly at ``tau``.

    ``full_band_rates`` are the devices' rates at the whole band (ratio 1).
    Devices with nothing to send get ratio 0.  Raises ValueError if ``tau``
    does not exceed some device's compute time, naming the device.
    """
    data = np.asarray(data_bits, dtype=float)
    compute = np.asarray(compute_s, dtype=float)
    rates = np.asarray(full_band_rates, dtype=float)
    active = data > 0
    bad = active & (tau <= compute)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ValueError(
            f"tau={tau} does not exceed compute latency {compute[k]} of device {k}"
        )
    ratios = np.zeros_like(data)
    ratios[active] = data[active] / ((tau - compute[active]) * rates[active])
    return ratios


def finish_times(ratios, data_bits, compute_s, full_band_rates) -> np.ndarray:
    """Per-device total latency under an allocation (inf where starved)."""
    data = np.asarray(data_bits, dtype=float)
    compute = np.asarray(compute_s, dtype=float)
    rates = np.asarray(full_band_rates, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    out = compute.copy()
    active = data > 0
    with np.errstate(divide="ignore"):
        out[active] += data[active] / (ratios[active] * rates[active])
    return out


def binary_search_allocation(
    data_bits,
    compute_s,
    full_band_rates,
    eps_tol: float = 1e-3,
    tau_up: float | None = None,
) -> BandwidthAllocation:
    """Find the smallest common finish time whose ratios almost fill the band.

    Accepts when ``1 - eps_tol <= sum(ratios) <= 1``; the leftover (at most
    ``eps_tol``) stays unallocated.  The search region starts at the largest
    compute latency and an upper bound obtained by doubling from the finish
    time at a uniform 1/K share, which by construction already needs at most
    the whole band.
    """
    data = np.asarray(data_bits, dtype=float)
    compute = np.asarray(compute_s, dtype=float)
    rates = np.asarray(full_band_rates, dtype=float)
    if not 0 < eps_tol < 0.1:
        raise ValueError("eps_tol must be in (0, 0.1)")
    if np.any(~np.isfinite(rates)) or np.any(rates <= 0):
        raise ValueError("all devices need a positive finite full-band rate")
    if np.any(data < 0) or np.any(compute < 0):
        raise ValueError("data_bits and compute_s must be >= 0")
    if not np.any(data > 0):
        # nothing to transmit: the band is irrelevant
        return BandwidthAllocation(np.zeros_like(data), float(compute.max()), 1.0)

    k = len(data)
    tau_low = float(compute.max())
    if tau_up is None:
        uniform_comm = np.max(data / ((1.0 / k) * rates))
        tau_up = tau_low + uniform_comm
        while ratio_for_tau(tau_up, data, compute, rates).sum() >= 1.0:
            tau_up = tau_low + 2.0 * (tau_up - tau_low)
    elif tau_up <= tau_low:
        raise ValueError("tau_up must exceed the largest compute latency")

    tau = tau_up
    for _ in range(_MAX_ITER):
        ratios = ratio_for_tau(tau, data, compute, rates)
        total = ratios.sum()
        if total > 1.0:
            tau_low = tau
            tau = 0.5 * (tau + tau_up)
        elif total < 1.0 - eps_tol:
            tau_up = tau
            tau = 0.5 * (tau + tau_low)
        else:
            return BandwidthAllocation(ratios, float(tau), float(1.0 - total))
    raise NumericalError(
        f"bandwidth search did not settle within {_MAX_ITER} iterations "
        f"(last total {total:.6f}); the total-ratio curve should be monotone"
    )
