"""Optimal-stopping split-point selection for one device.

A device executes layers in order and, after each layer, compares its
cumulative compute latency against a precomputed threshold: below the
threshold it stops and transmits the layer's output, otherwise it keeps
computing.  Thresholds, per-layer expected costs, and the resulting
stop-layer distribution come from a backward-induction sweep starting at
the deepest permitted layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .profiler import NetworkProfile
from .wireless import DeviceProfile

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class SplitPolicy:
    """Stopping policy for one device, truncated at the deepest layer allowed.

    ``thresholds[l]`` is the cumulative-compute-latency threshold below which
    the device splits at layer l+1 (the last entry is +inf: the device must
    stop at the cap).  ``chosen_split`` is 1-based.
    """

    thresholds: np.ndarray
    expected_costs: np.ndarray
    split_probs: np.ndarray
    chosen_split: int

    def __post_init__(self):
        p = np.asarray(self.split_probs, dtype=float)
        if abs(p.sum() - 1.0) > _PROB_TOL:
            raise ValueError(f"split probabilities sum to {p.sum()}, not 1")
        ev = np.asarray(self.expected_costs, dtype=float)
        if not np.all(np.isfinite(ev)) or np.any(ev <= 0):
            raise ValueError("expected costs must be finite and positive")
        if not 1 <= self.chosen_split <= len(p):
            raise ValueError("chosen_split out of range")


def split_layer_cap(moment_per_layer, moment_cap, num_devices, num_layers):
    """Deepest split layer permitted by the convergence constraint.

    Returns ``min(num_layers, floor(moment_cap / ((1 - 1/K) * moment_per_layer)))``.
    With a single device the constraint is vacuous and the full depth is
    allowed.  Raises :class:`InfeasibleError` if even layer 1 is excluded.
    """
    if moment_per_layer <= 0 or moment_cap <= 0:
        raise ValueError("moment bounds must be > 0")
    if num_devices < 1 or num_layers < 1:
        raise ValueError("num_devices and num_layers must be >= 1")
    if num_devices == 1:
        return num_layers
    # tiny epsilon absorbs float noise when the ratio is an exact integer
    raw = math.floor(moment_cap / ((1.0 - 1.0 / num_devices) * moment_per_layer) + 1e-9)
    cap = min(num_layers, raw)
    if cap < 1:
        raise InfeasibleError(
            f"convergence constraint excludes every layer (raw cap {raw}); "
            "raise the moment cap or reduce the device count"
        )
    return cap


def _survival(thresholds, dev, cum_macs):
    """P(no split at layer j) for j < cap: exp{-(eps/c_j)(thr_j - a*c_j)}, clamped."""
    c = np.asarray(cum_macs, dtype=float)
    thr = np.asarray(thresholds, dtype=float)
    exponent = -(dev.fluctuation_rate / c) * (thr - dev.sec_per_mac * c)
    with np.errstate(over="ignore"):
        return np.clip(np.exp(exponent), 0.0, 1.0)


def split_probabilities(thresholds, dev: DeviceProfile, cum_macs) -> np.ndarray:
    """Stop-layer distribution induced by the thresholds.

    P(1) = 1 - S_1, P(l) = (prod_{j<l} S_j)(1 - S_l) for interior layers,
    and all remaining mass collects at the cap, so the probabilities sum to
    one exactly by telescoping.
    """
    cap = len(thresholds)
    if cap == 1:
        return np.array([1.0])
    s = _survival(thresholds[:-1], dev, cum_macs[: cap - 1])
    probs = np.empty(cap)
    carried = 1.0
    for j in range(cap - 1):
        probs[j] = carried * (1.0 - s[j])
        carried *= s[j]
    probs[cap - 1] = carried
    return probs


def backward_induction(
    profile: NetworkProfile,
    dev: DeviceProfile,
    comm_latencies,
    max_split: int,
) -> SplitPolicy:
    """Compute the threshold policy for one device.

    ``comm_latencies[l]`` is the transmission time of layer l+1's output at
    the device's current bandwidth share; it must cover at least
    ``max_split`` layers.  At the cap the device always stops, so its
    expected cost there is the mean compute latency plus the transmission
    time.  Walking backward, the stop threshold at layer l is the
    continuation value minus the layer's transmission time, and the expected
    cost integrates the stop branch against the shifted-exponential density
    (the continuation branch carries the survival mass).
    """
    if max_split < 1:
        raise ValueError("max_split must be >= 1")
    if len(comm_latencies) < max_split:
        raise ValueError("comm_latencies must cover max_split layers")
    c = np.asarray(profile.cumulative_macs[:max_split], dtype=float)
    tau_cm = np.asarray(comm_latencies[:max_split], dtype=float)
    a, eps = dev.sec_per_mac, dev.fluctuation_rate

    ev = np.empty(max_split)
    thr = np.empty(max_split)
    ev[-1] = (a + 1.0 / eps) * c[-1] + tau_cm[-1]
    thr[-1] = math.inf  # forced stop at the cap
    for l in range(max_split - 2, -1, -1):
        tau_hat = ev[l + 1] - tau_cm[l]
        thr[l] = tau_hat
        floor = a * c[l]
        scale = c[l] / eps  # mean of the exponential fluctuation
        if tau_hat <= floor:
            # the stop branch has probability zero
            ev[l] = ev[l + 1]
        else:
            surv = math.exp(-(tau_hat - floor) / scale)
            stop_compute = floor + scale - (tau_hat + scale) * surv
            ev[l] = stop_compute + (1.0 - surv) * tau_cm[l] + ev[l + 1] * surv

    probs = split_probabilities(thr, dev, c)
    chosen = select_split(probs)
    return SplitPolicy(thresholds=thr, expected_costs=ev, split_probs=probs, chosen_split=chosen)


def select_split(split_probs) -> int:
    """Most probable stop layer, 1-based; ties break toward the input side."""
    return int(np.argmax(split_probs)) + 1


def expected_latency_at_split(
    dev: DeviceProfile, profile: NetworkProfile, split: int, comm_latencies
) -> float:
    """Mean compute latency at the split plus the split layer's transmission time."""
    c = float(profile.cumulative_macs[split - 1])
    return c * (dev.sec_per_mac + 1.0 / dev.fluctuation_rate) + float(comm_latencies[split - 1])
